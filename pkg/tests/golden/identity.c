#include "qf_runtime.h"

float prog (float x) {
  float r;
  r = x;
  return r;
}
