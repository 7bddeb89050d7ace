#pragma once

#include <stdexcept>
#include <string>

namespace featforge {

// Base class for all domain errors. CLI maps these to exit code 1.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

#define FEATFORGE_ERROR(Name)                                          \
    class Name : public Error {                                        \
    public:                                                            \
        explicit Name(const std::string& what) : Error(what) {}        \
    }

// repo-miner
FEATFORGE_ERROR(NotARepository);
FEATFORGE_ERROR(CorruptRepository);
FEATFORGE_ERROR(NoTagsMatched);
FEATFORGE_ERROR(MissingObject);

// feature-extract
FEATFORGE_ERROR(UnbalancedConditionals);

// bug-label
FEATFORGE_ERROR(NoParent);
FEATFORGE_ERROR(FeatureWithoutFiles);

// metrics
FEATFORGE_ERROR(FeatureNotInRelease);

// dataset
FEATFORGE_ERROR(EmptyDataset);
FEATFORGE_ERROR(TooFewReleases);
FEATFORGE_ERROR(TooFewMinority);
FEATFORGE_ERROR(IoError);
FEATFORGE_ERROR(SchemaMismatch);

// learn
FEATFORGE_ERROR(SingleClassTraining);

// eval
FEATFORGE_ERROR(SingleClassTest);
FEATFORGE_ERROR(TooFewInstances);

// scenarios
FEATFORGE_ERROR(UnmappedFeature);

// cli
FEATFORGE_ERROR(ConfigError);

#undef FEATFORGE_ERROR

} // namespace featforge
