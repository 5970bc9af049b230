#pragma once

#include <stdexcept>
#include <string>

namespace bigfive {

// Base for all pipeline errors. Subtypes name the failure mode so callers
// can catch a specific condition without string matching.
struct Error : std::runtime_error {
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

#define BIGFIVE_ERROR_TYPE(Name)                                     \
    struct Name : Error {                                            \
        explicit Name(const std::string& msg) : Error(msg) {}        \
    }

// core
BIGFIVE_ERROR_TYPE(DegenerateSplit);

// ingest
BIGFIVE_ERROR_TYPE(DuplicateId);
struct ParseError : Error {
    std::string path;
    long line = 0;  // 1-based; 0 = whole file
    ParseError(std::string p, long ln, const std::string& msg)
        : Error(p + (ln > 0 ? ":" + std::to_string(ln) : "") + ": " + msg),
          path(std::move(p)),
          line(ln) {}
};

// features
BIGFIVE_ERROR_TYPE(NoPlaces);
BIGFIVE_ERROR_TYPE(Insufficient);

// psychometrics
BIGFIVE_ERROR_TYPE(BadResponse);
BIGFIVE_ERROR_TYPE(ZeroVariance);
BIGFIVE_ERROR_TYPE(EmptyPopulation);

// impute
BIGFIVE_ERROR_TYPE(EmptyCohort);
BIGFIVE_ERROR_TYPE(AllMissingColumn);

// forest
BIGFIVE_ERROR_TYPE(SingleClass);
BIGFIVE_ERROR_TYPE(SchemaMismatch);
BIGFIVE_ERROR_TYPE(InvalidParam);

// eval
BIGFIVE_ERROR_TYPE(DegenerateTruth);
BIGFIVE_ERROR_TYPE(TooSmall);
BIGFIVE_ERROR_TYPE(EmptyStratum);
BIGFIVE_ERROR_TYPE(UnknownFeature);

// synth / config
BIGFIVE_ERROR_TYPE(ConfigError);

#undef BIGFIVE_ERROR_TYPE

}  // namespace bigfive
