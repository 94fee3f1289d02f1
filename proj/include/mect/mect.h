#ifndef MECT_H
#define MECT_H

#include <stddef.h>

#if defined(_WIN32)
#  if defined(MECT_BUILDING_LIBRARY)
#    define MECT_API __declspec(dllexport)
#  else
#    define MECT_API __declspec(dllimport)
#  endif
#else
#  define MECT_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum mect_status {
  MECT_OK = 0,
  MECT_ERR_ARGUMENT = 1,
  MECT_ERR_DIMENSION = 2,
  MECT_ERR_CONFIG = 3,
  MECT_ERR_PARSE = 4,
  MECT_ERR_CONTRACT = 5,
  MECT_ERR_CAPACITY = 6,
  MECT_ERR_IO = 7,
  MECT_ERR_NUMERIC = 8,
  MECT_ERR_INTERNAL = 9
} mect_status;

/* Opaque trained model. */
typedef struct mect_model mect_model;

/* Message of the last failure on the calling thread; never NULL. */
MECT_API const char* mect_last_error(void);
MECT_API const char* mect_status_name(mect_status status);

/* Strings returned through `char**` are owned by the caller. */
MECT_API void mect_string_free(char* s);

/* Training options; `overrides` is a newline separated list of key=value
   pairs applied on top of the config file. Any path may be NULL. */
typedef struct mect_train_options {
  const char* overrides;
  const char* metrics_path;
  const char* checkpoint_path;
  int verbose;
} mect_train_options;

MECT_API mect_status mect_train(const char* config_path, const mect_train_options* options,
                                mect_model** out);

MECT_API mect_status mect_model_load(const char* checkpoint_path, mect_model** out);
MECT_API mect_status mect_model_save(const mect_model* model, const char* path);
MECT_API void mect_model_free(mect_model* model);
MECT_API mect_status mect_model_param_count(const mect_model* model, size_t* out);

/* Span-level precision, recall and F1 on a labelled file. `report` may be
   NULL; otherwise it receives a printable table. */
MECT_API mect_status mect_evaluate(const mect_model* model, const char* data_path,
                                   double* precision, double* recall, double* f1,
                                   char** report);

/* Tags a CoNLL or raw-text file. `span_format` selects one line per
   sentence with start-end:TYPE spans instead of CoNLL rows. */
MECT_API mect_status mect_predict_file(const mect_model* model, const char* input_path,
                                       int span_format, char** output);

/* Writes the CSV attention dump for the sentences of a file. */
MECT_API mect_status mect_dump_attention(const mect_model* model, const char* input_path,
                                         const char* csv_path);

/* Finite-difference check of every parameter of a small model built from
   the config. */
MECT_API mect_status mect_gradcheck(const char* config_path, const char* overrides,
                                    double step, double tolerance, double* max_rel_error,
                                    int* passed, char** report);

/* Lattice listing for each sentence of a CoNLL or raw-text file. */
MECT_API mect_status mect_lattice_dump(const char* data_path, const char* lexicon_path,
                                       char** output);

/* Dataset statistics table for one or more files. */
MECT_API mect_status mect_dataset_stats(const char* const* paths, size_t count,
                                        const char* scheme, char** output);

#ifdef __cplusplus
}
#endif

#endif
