#include <stdio.h>
#include <string.h>

#include "lsrlong.h"

/* usage: smoke <segments.jsonl> <index dir> */
int main(int argc, char **argv) {
    if (argc != 3) {
        return 2;
    }
    LsrIndex *built = NULL;
    if (lsr_index_build(argv[1], &built) != LSR_STATUS_OK) {
        fprintf(stderr, "build: %s\n", lsr_last_error());
        return 1;
    }
    if (lsr_index_save(built, argv[2]) != LSR_STATUS_OK) {
        return 1;
    }
    lsr_index_free(built);

    LsrIndex *index = NULL;
    if (lsr_index_open(argv[2], &index) != LSR_STATUS_OK) {
        fprintf(stderr, "open: %s\n", lsr_last_error());
        return 1;
    }
    LsrScorerConfig cfg;
    if (lsr_scorer_config_default(LSR_SCORER_KIND_EXACT_SDM, &cfg) != LSR_STATUS_OK) {
        return 1;
    }
    uint32_t terms[] = {1, 2};
    double weights[] = {1.0, 0.5};
    LsrResults *res = NULL;
    if (lsr_search(index, terms, weights, 2, 3, 10, &cfg, &res) != LSR_STATUS_OK) {
        fprintf(stderr, "search: %s\n", lsr_last_error());
        return 1;
    }
    for (size_t i = 0; i < lsr_results_len(res); i++) {
        double score = 0.0;
        lsr_results_score(res, i, &score);
        printf("%s %.6f\n", lsr_results_doc_id(res, i), score);
    }
    if (lsr_results_doc_id(res, 99) != NULL) {
        return 1;
    }
    lsr_results_free(res);

    cfg.kind = 42;
    if (lsr_search(index, terms, weights, 2, 3, 10, &cfg, &res) != LSR_STATUS_INVALID_ARGUMENT) {
        return 1;
    }
    printf("error: %s\n", lsr_last_error());
    lsr_index_free(index);
    return 0;
}
