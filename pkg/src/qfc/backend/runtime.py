"""The fixed runtime header shipped next to generated C."""

from __future__ import annotations

from pathlib import Path

from .cgen import RUNTIME_HEADER_NAME

RUNTIME_HEADER = r"""/* Runtime support for generated routines. */
#ifndef QF_RUNTIME_H
#define QF_RUNTIME_H

#include <math.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

typedef struct { uint32_t len; float *data; } qf_arr_float;
typedef struct { uint32_t len; int32_t *data; } qf_arr_int;
typedef struct { uint32_t len; bool *data; } qf_arr_bool;

/* Called on a failed run-time check; a harness may override the default. */
#ifndef QF_TRAP
#define QF_TRAP(code) abort()
#endif

static inline void *qf_alloc_bytes(int32_t n, size_t size) {
  void *p;
  if (n < 0) {
    QF_TRAP(604);
  }
  if (n == 0) {
    return NULL;
  }
  p = malloc((size_t) n * size);
  if (p == NULL) {
    abort();
  }
  return p;
}

static inline qf_arr_float qf_alloc_float(int32_t n) {
  qf_arr_float a;
  a.data = (float *) qf_alloc_bytes(n, sizeof(float));
  a.len = (uint32_t) (n < 0 ? 0 : n);
  return a;
}

static inline qf_arr_int qf_alloc_int(int32_t n) {
  qf_arr_int a;
  a.data = (int32_t *) qf_alloc_bytes(n, sizeof(int32_t));
  a.len = (uint32_t) (n < 0 ? 0 : n);
  return a;
}

static inline qf_arr_bool qf_alloc_bool(int32_t n) {
  qf_arr_bool a;
  a.data = (bool *) qf_alloc_bytes(n, sizeof(bool));
  a.len = (uint32_t) (n < 0 ? 0 : n);
  return a;
}

static inline int32_t qf_check_index(int32_t i, uint32_t len) {
  if (i < 0 || (uint32_t) i >= len) {
    QF_TRAP(601);
    return 0;
  }
  return i;
}

#ifdef QF_CHECKED
#define QF_IX(a, i) ((a).data[qf_check_index((i), (a).len)])
#else
#define QF_IX(a, i) ((a).data[(i)])
#endif

/* Integer division and remainder truncate toward zero and wrap at 32 bits. */
static inline int32_t qf_div(int32_t a, int32_t b) {
  if (b == 0) {
    QF_TRAP(602);
    return 0;
  }
  if (b == -1) {
    return (int32_t) (0u - (uint32_t) a);
  }
  return a / b;
}

static inline int32_t qf_mod(int32_t a, int32_t b) {
  if (b == 0) {
    QF_TRAP(602);
    return 0;
  }
  if (b == -1) {
    return 0;
  }
  return a % b;
}

#endif
"""


def write_runtime(directory: str | Path) -> Path:
    """Write the header into ``directory`` and return its path."""
    path = Path(directory) / RUNTIME_HEADER_NAME
    path.write_text(RUNTIME_HEADER, encoding="utf-8")
    return path
