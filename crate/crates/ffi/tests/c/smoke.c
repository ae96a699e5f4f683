/* Links against the static library and exercises handles and error codes. */
#include <math.h>
#include <stdio.h>
#include <string.h>

#include "segfd.h"

#define CHECK(cond)                                                      \
  do {                                                                   \
    if (!(cond)) {                                                       \
      fprintf(stderr, "check failed at line %d: %s\n", __LINE__, #cond); \
      return 1;                                                          \
    }                                                                    \
  } while (0)

int main(void) {
  double risks[4] = {0.1, 0.5, 0.7, 0.72};
  double conf[4] = {4.0, 3.0, 2.0, 1.0};
  double value = 0.0;
  CHECK(segfd_aurc(risks, conf, 4, &value) == SEGFD_STATUS_OK);
  CHECK(fabs(value - 0.33458333333333) < 1e-9);

  SegfdCurve *curve = NULL;
  size_t len = 0;
  CHECK(segfd_rc_curve_new(risks, conf, 4, &curve) == SEGFD_STATUS_OK);
  CHECK(segfd_rc_curve_len(curve, &len) == SEGFD_STATUS_OK && len == 4);
  segfd_rc_curve_free(curve);

  size_t dims[2] = {2, 2};
  double spacing[2] = {1.0, 1.0};
  uint32_t ids[1] = {1};
  uint32_t a[4] = {1, 1, 0, 0};
  uint32_t b[4] = {1, 0, 0, 0};
  SegfdLabelMap *pa = NULL, *pb = NULL;
  CHECK(segfd_label_map_new_exclusive(dims, 2, spacing, ids, 1, a, &pa) == SEGFD_STATUS_OK);
  CHECK(segfd_label_map_new_exclusive(dims, 2, spacing, ids, 1, b, &pb) == SEGFD_STATUS_OK);
  CHECK(segfd_mean_dsc(pa, pb, &value) == SEGFD_STATUS_OK);
  CHECK(fabs(value - 2.0 / 3.0) < 1e-15);

  uint32_t bad[4] = {7, 0, 0, 0};
  SegfdLabelMap *pbad = NULL;
  CHECK(segfd_label_map_new_exclusive(dims, 2, spacing, ids, 1, bad, &pbad) != SEGFD_STATUS_OK);
  CHECK(pbad == NULL);
  CHECK(segfd_last_error_message() != NULL);
  CHECK(segfd_mean_dsc(NULL, pb, &value) == SEGFD_STATUS_NULL_POINTER);

  segfd_label_map_free(pa);
  segfd_label_map_free(pb);
  printf("segfd %s ok\n", segfd_version());
  return 0;
}
