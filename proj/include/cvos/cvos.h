#ifndef CVOS_H_
#define CVOS_H_

/* C interface to the curricula-vos toolkit: curriculum schedules, the COCO
 * RLE mask codec, synthetic data generation, training, MOTS evaluation and
 * report emission. Every fallible call returns a cvos_status;
 * cvos_last_error() describes the most recent failure on the calling
 * thread. */

#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

typedef enum cvos_status {
  CVOS_OK = 0,
  CVOS_INVALID_ARGUMENT = 1, /* bad value or combination of values */
  CVOS_PARSE_ERROR = 2,      /* malformed text input */
  CVOS_IO_ERROR = 3,         /* filesystem failure */
  CVOS_RUNTIME_ERROR = 4     /* anything else, e.g. diverged training */
} cvos_status;

const char* cvos_version(void);

/* Message of the most recent failing call on this thread; "" after a
 * success. The pointer stays valid until the next call on the same
 * thread. */
const char* cvos_last_error(void);

/* ---- curriculum ---- */

int cvos_schedule_count(void);
const char* cvos_schedule_name(int index); /* NULL when out of range */
int cvos_skip_scheme_count(void);
const char* cvos_skip_scheme_name(int index);

/* Probability of feeding the ground-truth previous mask at `epoch` of a
 * run of `total_epochs` under the named schedule. */
cvos_status cvos_gt_probability(const char* schedule, int total_epochs,
                                int epoch, double* out_p);

/* Frame-skip step at `epoch` for the named scheme. `pred_phase` selects
 * the prediction phase (nonzero) over the ground-truth phase; the
 * apply_at_* flags gate the scheme per phase, and a gated-off phase skips
 * nothing. The progression restarts every `phase_length` epochs. */
cvos_status cvos_skip_for_epoch(const char* scheme, int apply_at_gt,
                                int apply_at_pred, int phase_length,
                                int epoch, int pred_phase, int* out_skip);

/* ---- COCO RLE codec ---- */

/* mask: height*width bytes, row-major, nonzero = set pixel. *out receives
 * a NUL-terminated RLE string to release with cvos_free. */
cvos_status cvos_rle_encode(const uint8_t* mask, int height, int width,
                            char** out);

/* *out receives height*width bytes (row-major, 0 or 1) to release with
 * cvos_free. */
cvos_status cvos_rle_decode(const char* rle, int height, int width,
                            uint8_t** out);

void cvos_free(void* ptr);

/* ---- synthetic data ---- */

/* Writes a dataset below out_dir. Arguments <= 0 keep their defaults
 * (4 sequences, 30 frames, 32x32, 2 objects, speeds 0.5..2). */
cvos_status cvos_generate(const char* out_dir, int sequences, int frames,
                          int height, int width, int objects,
                          double speed_min, double speed_max, uint64_t seed);

/* ---- training ---- */

typedef struct cvos_config cvos_config;

cvos_config* cvos_config_new(void); /* NULL on allocation failure */
void cvos_config_free(cvos_config* config);

/* Keys are the CLI flag names: data, out, run-id, schedule, skip,
 * skip-at-gt, skip-at-pred, phase-length, epochs, clips-per-epoch, batch,
 * clip-length, size (HxW), channels, hidden-channels, lr, eval-every,
 * seed. */
cvos_status cvos_config_set(cvos_config* config, const char* key,
                            const char* value);

/* key=value lines, '#' comments. */
cvos_status cvos_config_load_file(cvos_config* config, const char* path);

/* Runs the experiment into <out>/<run-id>: final.ckpt(.meta),
 * best.ckpt(.meta) and runlog.csv. Stores the best averaged sMOTSA seen
 * in *out_best_smotsa when non-NULL. */
cvos_status cvos_train(const cvos_config* config, double* out_best_smotsa);

/* ---- evaluation ---- */

typedef struct cvos_metrics cvos_metrics;

/* gt_path and pred_path name annotation files or directories of them. */
cvos_status cvos_evaluate(const char* gt_path, const char* pred_path,
                          int class_id, cvos_metrics** out);

int cvos_metrics_sequence_count(const cvos_metrics* metrics);
const char* cvos_metrics_sequence_id(const cvos_metrics* metrics, int index);

/* index in [0, sequence_count) for one sequence, -1 for the average over
 * sequences. Output pointers may be NULL. Values are percentages. */
cvos_status cvos_metrics_row(const cvos_metrics* metrics, int index,
                             double* smotsa, double* motsp, double* recall,
                             double* precision, double* motsa);

int cvos_metrics_warning_count(const cvos_metrics* metrics);
const char* cvos_metrics_warning(const cvos_metrics* metrics, int index);

cvos_status cvos_metrics_write_csv(const cvos_metrics* metrics,
                                   const char* path);

void cvos_metrics_free(cvos_metrics* metrics);

/* ---- reporting ---- */

/* Builds report.csv, report.txt and the SVG charts from a directory of
 * completed runs. */
cvos_status cvos_report(const char* runs_dir, const char* out_dir);

#ifdef __cplusplus
} /* extern "C" */
#endif

#endif /* CVOS_H_ */
