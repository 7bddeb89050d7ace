#include <featforge/process.hpp>

#include <featforge/errors.hpp>

#include <cerrno>
#include <cstring>

#include <fcntl.h>
#include <poll.h>
#include <sys/wait.h>
#include <unistd.h>

namespace featforge {

namespace {

void set_cloexec(int fd) {
    fcntl(fd, F_SETFD, FD_CLOEXEC);
}

} // namespace

ProcessResult run_process(const std::vector<std::string>& argv,
                          const std::string& stdin_data) {
    if (argv.empty())
        throw Error("run_process: empty argv");

    int in_pipe[2];
    int out_pipe[2];
    int err_pipe[2];
    if (pipe(in_pipe) != 0 || pipe(out_pipe) != 0 || pipe(err_pipe) != 0)
        throw Error(std::string("pipe failed: ") + std::strerror(errno));

    pid_t pid = fork();
    if (pid < 0)
        throw Error(std::string("fork failed: ") + std::strerror(errno));

    if (pid == 0) {
        dup2(in_pipe[0], STDIN_FILENO);
        dup2(out_pipe[1], STDOUT_FILENO);
        dup2(err_pipe[1], STDERR_FILENO);
        close(in_pipe[0]);
        close(in_pipe[1]);
        close(out_pipe[0]);
        close(out_pipe[1]);
        close(err_pipe[0]);
        close(err_pipe[1]);

        std::vector<char*> args;
        args.reserve(argv.size() + 1);
        for (const auto& a : argv)
            args.push_back(const_cast<char*>(a.c_str()));
        args.push_back(nullptr);
        execvp(args[0], args.data());
        _exit(127);
    }

    close(in_pipe[0]);
    close(out_pipe[1]);
    close(err_pipe[1]);
    set_cloexec(in_pipe[1]);
    set_cloexec(out_pipe[0]);
    set_cloexec(err_pipe[0]);

    ProcessResult result;
    size_t written = 0;
    bool stdin_open = true;
    if (stdin_data.empty()) {
        close(in_pipe[1]);
        stdin_open = false;
    }

    char buf[65536];
    bool out_open = true;
    bool err_open = true;
    while (out_open || err_open || stdin_open) {
        struct pollfd fds[3];
        nfds_t n = 0;
        int out_idx = -1, err_idx = -1, in_idx = -1;
        if (out_open) {
            out_idx = static_cast<int>(n);
            fds[n++] = {out_pipe[0], POLLIN, 0};
        }
        if (err_open) {
            err_idx = static_cast<int>(n);
            fds[n++] = {err_pipe[0], POLLIN, 0};
        }
        if (stdin_open) {
            in_idx = static_cast<int>(n);
            fds[n++] = {in_pipe[1], POLLOUT, 0};
        }
        int rc = poll(fds, n, -1);
        if (rc < 0) {
            if (errno == EINTR)
                continue;
            break;
        }
        if (out_idx >= 0 && (fds[out_idx].revents & (POLLIN | POLLHUP))) {
            ssize_t got = read(out_pipe[0], buf, sizeof(buf));
            if (got <= 0) {
                close(out_pipe[0]);
                out_open = false;
            } else {
                result.out.append(buf, static_cast<size_t>(got));
            }
        }
        if (err_idx >= 0 && (fds[err_idx].revents & (POLLIN | POLLHUP))) {
            ssize_t got = read(err_pipe[0], buf, sizeof(buf));
            if (got <= 0) {
                close(err_pipe[0]);
                err_open = false;
            } else {
                result.err.append(buf, static_cast<size_t>(got));
            }
        }
        if (in_idx >= 0 && (fds[in_idx].revents & (POLLOUT | POLLERR | POLLHUP))) {
            if (fds[in_idx].revents & (POLLERR | POLLHUP)) {
                close(in_pipe[1]);
                stdin_open = false;
            } else {
                ssize_t put = write(in_pipe[1], stdin_data.data() + written,
                                    stdin_data.size() - written);
                if (put < 0) {
                    close(in_pipe[1]);
                    stdin_open = false;
                } else {
                    written += static_cast<size_t>(put);
                    if (written == stdin_data.size()) {
                        close(in_pipe[1]);
                        stdin_open = false;
                    }
                }
            }
        }
    }

    int status = 0;
    while (waitpid(pid, &status, 0) < 0 && errno == EINTR) {
    }
    if (WIFEXITED(status))
        result.exit_code = WEXITSTATUS(status);
    else
        result.exit_code = 128 + (WIFSIGNALED(status) ? WTERMSIG(status) : 0);
    return result;
}

std::string utf8_lossy(const std::string& bytes) {
    static const char replacement[] = "\xEF\xBF\xBD";
    std::string out;
    out.reserve(bytes.size());
    size_t i = 0;
    const size_t n = bytes.size();
    while (i < n) {
        unsigned char c = static_cast<unsigned char>(bytes[i]);
        size_t len;
        if (c < 0x80) {
            out.push_back(static_cast<char>(c));
            ++i;
            continue;
        } else if ((c & 0xE0) == 0xC0 && c >= 0xC2) {
            len = 2;
        } else if ((c & 0xF0) == 0xE0) {
            len = 3;
        } else if ((c & 0xF8) == 0xF0 && c <= 0xF4) {
            len = 4;
        } else {
            out.append(replacement);
            ++i;
            continue;
        }
        if (i + len > n) {
            out.append(replacement);
            ++i;
            continue;
        }
        bool valid = true;
        for (size_t k = 1; k < len; ++k) {
            unsigned char cc = static_cast<unsigned char>(bytes[i + k]);
            if ((cc & 0xC0) != 0x80) {
                valid = false;
                break;
            }
        }
        // Reject overlong / surrogate / out-of-range forms.
        if (valid && len == 3) {
            unsigned char c1 = static_cast<unsigned char>(bytes[i + 1]);
            if ((c == 0xE0 && c1 < 0xA0) || (c == 0xED && c1 > 0x9F))
                valid = false;
        }
        if (valid && len == 4) {
            unsigned char c1 = static_cast<unsigned char>(bytes[i + 1]);
            if ((c == 0xF0 && c1 < 0x90) || (c == 0xF4 && c1 > 0x8F))
                valid = false;
        }
        if (valid) {
            out.append(bytes, i, len);
            i += len;
        } else {
            out.append(replacement);
            ++i;
        }
    }
    return out;
}

} // namespace featforge
