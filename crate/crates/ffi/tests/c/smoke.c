#include <math.h>
#include <stdio.h>
#include <string.h>

#include "cwbench.h"

#define EXPECT(cond)                                                   \
    do {                                                               \
        if (!(cond)) {                                                 \
            fprintf(stderr, "%s:%d: %s (%s)\n", __FILE__, __LINE__,    \
                    #cond, cw_last_error_message());                   \
            return 1;                                                  \
        }                                                              \
    } while (0)

int main(void) {
    CwBody *ball = NULL;
    EXPECT(cw_body_from_json("{\"family\": \"ball\", \"radius\": 1.0}", 3, &ball) == CW_OK);
    EXPECT(cw_body_dim(ball) == 3);

    double m0 = 0.0;
    EXPECT(cw_body_mean_curvature_integral(ball, 0, &m0) == CW_OK);
    EXPECT(fabs(m0 - 4.0 * M_PI) < 1e-12);

    CwFormulaParams p = {2, 1, 0, CW_UNSET, CW_UNSET, CW_UNSET, CW_UNSET};
    CwFormula *f = NULL;
    char *text = NULL;
    EXPECT(cw_formula_build("thm-1.1", &p, &f) == CW_OK);
    EXPECT(cw_formula_to_string(f, &text) == CW_OK);
    EXPECT(strcmp(text, "(-2)*V'_1 + (pi)*M'(1,0)*h + (pi)*M'(1,0)*rho") == 0);
    cw_string_free(text);
    cw_formula_free(f);

    EXPECT(cw_body_from_json("{\"family\": \"nope\"}", 3, &ball) == CW_PARSE);
    EXPECT(strlen(cw_last_error_message()) > 0);

    char *area = NULL;
    EXPECT(cw_sphere_area(3, &area, NULL) == CW_OK);
    EXPECT(strcmp(area, "2*pi^2") == 0);
    cw_string_free(area);

    cw_body_free(ball);
    puts("ok");
    return 0;
}
