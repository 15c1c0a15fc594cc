#include <math.h>
#include <stdio.h>
#include <string.h>

#include "tempojd.h"

#define CHECK(cond)                                                    \
  do {                                                                 \
    if (!(cond)) {                                                     \
      const char *e = tjd_last_error();                                \
      fprintf(stderr, "%s:%d: %s (%s)\n", __FILE__, __LINE__, #cond,   \
              e ? e : "no message");                                   \
      return 1;                                                        \
    }                                                                  \
  } while (0)

int main(void) {
  CHECK(strlen(tjd_version()) > 0);

  /* path 0-1-2 plus 1-3: every BFS tree is the graph itself */
  size_t edges[] = {0, 1, 1, 2, 1, 3};
  TjdBatch *batch = NULL;
  CHECK(tjd_batch_sample_graph(4, edges, 3, 50, 7, &batch) == TJD_STATUS_OK);
  CHECK(tjd_batch_len(batch) == 50);

  TjdJd *jd = NULL;
  CHECK(tjd_jd_run(batch, 1e-9, 100, &jd) == TJD_STATUS_OK);
  CHECK(tjd_jd_dim(jd) == 4);
  double hbar[16];
  CHECK(tjd_jd_average(jd, hbar, 3) == TJD_STATUS_BUFFER_TOO_SMALL);
  CHECK(tjd_jd_average(jd, hbar, 16) == TJD_STATUS_OK);
  CHECK(fabs(hbar[0 * 4 + 1] - 1.0) < 1e-6);
  CHECK(fabs(hbar[0 * 4 + 2]) < 1e-6);
  double dev[50];
  CHECK(tjd_jd_deviations(jd, dev, 50) == TJD_STATUS_OK);
  CHECK(dev[0] < 1e-9);

  TjdNetwork *net = NULL;
  CHECK(tjd_network_load("/nonexistent/trace.csv", TJD_TRACE_FORMAT_CSV, 1.0, &net) ==
        TJD_STATUS_DATA_ERROR);
  CHECK(net == NULL);
  CHECK(tjd_last_error() != NULL);
  CHECK(tjd_jd_run(NULL, 1e-9, 10, &jd) == TJD_STATUS_NULL_POINTER);

  tjd_jd_free(jd);
  tjd_batch_free(batch);
  tjd_network_free(NULL);
  printf("ok\n");
  return 0;
}
