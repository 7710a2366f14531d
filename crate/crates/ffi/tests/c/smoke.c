#include <stdio.h>
#include <stdlib.h>
#include "attloc.h"

int main(int argc, char **argv) {
    if (argc != 3) {
        return 64;
    }
    AttlocModel *model = NULL;
    if (attloc_model_load(argv[1], &model) != ATTLOC_STATUS_OK) {
        fprintf(stderr, "%s\n", attloc_last_error());
        return 1;
    }
    size_t frames = 0;
    if (attloc_wav_log_mel(model, argv[2], NULL, 0, &frames) != ATTLOC_STATUS_BUFFER_TOO_SMALL) {
        return 2;
    }
    double *mel = malloc(frames * attloc_num_mels() * sizeof(double));
    if (attloc_wav_log_mel(model, argv[2], mel, frames, &frames) != ATTLOC_STATUS_OK) {
        return 3;
    }
    double probs[7];
    if (attloc_predict(model, mel, frames, probs) != ATTLOC_STATUS_OK) {
        return 4;
    }
    for (size_t i = 0; i < attloc_num_tags(); i++) {
        printf("%.17g\n", probs[i]);
    }
    free(mel);
    attloc_model_free(model);
    return 0;
}
