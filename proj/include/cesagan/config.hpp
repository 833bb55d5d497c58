#pragma once

// Activation/parameter precision. The gradient-check build defines CESAGAN_REAL_DOUBLE.
// Each precision lives in its own inline namespace so both builds can link into one binary.
#ifdef CESAGAN_REAL_DOUBLE
#define CESAGAN_PRECISION_TAG f64
#else
#define CESAGAN_PRECISION_TAG f32
#endif

#define CESAGAN_NAMESPACE_BEGIN \
    namespace cesagan {         \
    inline namespace CESAGAN_PRECISION_TAG {
#define CESAGAN_NAMESPACE_END \
    }                         \
    }

CESAGAN_NAMESPACE_BEGIN
#ifdef CESAGAN_REAL_DOUBLE
using Real = double;
#else
using Real = float;
#endif
CESAGAN_NAMESPACE_END
