#pragma once

#if defined(_OPENMP)
#include <omp.h>
#define SCNET_PRAGMA(x) _Pragma(#x)
#define SCNET_PARALLEL_FOR SCNET_PRAGMA(omp parallel for schedule(static))
#define SCNET_PARALLEL SCNET_PRAGMA(omp parallel)
#define SCNET_FOR SCNET_PRAGMA(omp for schedule(static))
#else
#define SCNET_PARALLEL_FOR
#define SCNET_PARALLEL
#define SCNET_FOR
#endif
