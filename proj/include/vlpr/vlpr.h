#ifndef VLPR_H
#define VLPR_H

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

#if defined(_WIN32)
#define VLPR_API __declspec(dllexport)
#else
#define VLPR_API __attribute__((visibility("default")))
#endif

typedef enum {
    VLPR_OK = 0,
    VLPR_ERR_INTERNAL = 1,
    VLPR_ERR_INVALID_ARGUMENT = 2,
    VLPR_ERR_IO = 3,
    VLPR_ERR_FORMAT = 4,
    VLPR_ERR_DEGENERATE = 5,
    VLPR_ERR_NO_PLATE = 6,
    VLPR_ERR_UNREADABLE = 7,
    VLPR_ERR_ALIGNMENT = 8
} vlpr_status;

typedef struct vlpr_config vlpr_config;
typedef struct vlpr_model vlpr_model;

/* Message for the last failing call on this thread; "" if none. */
VLPR_API const char* vlpr_last_error(void);
VLPR_API const char* vlpr_status_name(int status);
VLPR_API const char* vlpr_version(void);

/* Strings returned through char** out-parameters are owned by the caller. */
VLPR_API void vlpr_string_free(char* s);

VLPR_API int vlpr_config_new(vlpr_config** out);
VLPR_API void vlpr_config_free(vlpr_config* cfg);
VLPR_API int vlpr_config_load_file(vlpr_config* cfg, const char* path);
/* "key=value" */
VLPR_API int vlpr_config_apply(vlpr_config* cfg, const char* assignment);
VLPR_API int vlpr_config_set(vlpr_config* cfg, const char* key, const char* value);
VLPR_API int vlpr_config_get(const vlpr_config* cfg, const char* key, char** out);
VLPR_API int vlpr_config_validate(const vlpr_config* cfg);
VLPR_API int vlpr_config_to_json(const vlpr_config* cfg, char** out);

/* Writes n scenes and manifest.jsonl into out_dir using the synth.* ranges. */
VLPR_API int vlpr_synth(const vlpr_config* cfg, uint64_t n, uint64_t seed, const char* out_dir, int parallelism,
                        char** manifest_path);

/* stage: "chars" (PCA + KNN) or "plates" (DCT + SVM gallery). */
VLPR_API int vlpr_train(const vlpr_config* cfg, const char* stage, const char* manifest, int parallelism,
                        vlpr_model** out);

VLPR_API int vlpr_model_load(const char* path, vlpr_model** out);
VLPR_API int vlpr_model_save(const vlpr_model* model, const char* path);
VLPR_API void vlpr_model_free(vlpr_model* model);
/* "chars", "plates", "pca", "knn" or "svm". */
VLPR_API int vlpr_model_kind(const vlpr_model* model, char** out);
VLPR_API int vlpr_model_describe(const vlpr_model* model, char** out);

/* input: a single image (PGM or PNG) or a manifest (.jsonl). Produces one JSON
 * record per line. Per-image failures are reported in the records, not as a
 * status; n_ok counts records with status "ok" or "unknown". */
VLPR_API int vlpr_recognize(const vlpr_config* cfg, const vlpr_model* model, const char* input,
                            const char* debug_dir, int parallelism, char** records, size_t* n_records,
                            size_t* n_ok);

/* stage: plate-detect | char-detect | char-recognize | plate-recognize.
 * model may be NULL for the detection stages. */
VLPR_API int vlpr_eval(const vlpr_config* cfg, const vlpr_model* model, const char* manifest,
                       const char* stage, int parallelism, char** report_csv, char** detail_csv,
                       long long* plates_exact, long long* plates_total);

/* Atomic write through a temporary file and rename. */
VLPR_API int vlpr_write_file(const char* path, const char* content, size_t size);

#ifdef __cplusplus
}
#endif

#endif
