#include <stdio.h>
#include <string.h>

#include "feedaudit.h"

int main(void) {
    FaFamily *family = NULL;
    if (fa_family_from_json("{\"id\": \"gaussian-known-var\"}", &family) != FA_STATUS_OK) {
        return 1;
    }

    double near[8] = {0.1, -0.3, 0.2, 0.0, -0.1, 0.4, -0.2, 0.1};
    double far[8];
    for (int i = 0; i < 8; i++) {
        far[i] = near[i] + 5.0;
    }

    FaVerdict verdict;
    double s1 = 0.0, s2 = 0.0;
    if (fa_decision_robustness_check(family, near, far, 8, 0.05, &verdict, &s1, &s2) != FA_STATUS_OK) {
        return 2;
    }
    printf("verdict %s %.6f %.6f\n", verdict == FA_VERDICT_FAIL ? "FAIL" : "PASS", s1, s2);
    fa_family_free(family);

    FaFamily *bad = NULL;
    if (fa_family_from_json("{\"id\": \"nope\"}", &bad) == FA_STATUS_FAMILY) {
        char *message = fa_last_error_message();
        printf("error family: %s\n", message ? message : "(none)");
        fa_string_free(message);
    }
    printf("version %s\n", fa_version());
    return 0;
}
