#include <stdio.h>
#include <stdlib.h>

#include "schelling.h"

int main(void) {
    SchellingSim *sim = NULL;
    if (schelling_sim_new(32, 2, 0.45, 7, &sim) != SCHELLING_STATUS_OK) {
        fprintf(stderr, "%s\n", schelling_last_error());
        return 1;
    }
    SchellingAbsorption rep;
    schelling_sim_run_until_absorbed(sim, 1000000000ull, &rep);
    size_t n = schelling_sim_n(sim);
    int8_t *spins = malloc(n * n);
    schelling_sim_copy_spins(sim, spins, n * n);
    long total = 0;
    for (size_t i = 0; i < n * n; i++) total += spins[i];
    printf("flips=%llu truncated=%d sum=%ld unhappy=%zu\n",
           (unsigned long long)rep.total_flips, (int)rep.truncated, total,
           schelling_sim_unhappy_count(sim));
    free(spins);
    schelling_sim_free(sim);

    SchellingSim *bad = NULL;
    SchellingStatus s = schelling_sim_new(4, 2, 0.45, 7, &bad);
    printf("bad=%d msg=%s\n", (int)s, schelling_last_error());
    return s == SCHELLING_STATUS_INVALID_ARGUMENT ? 0 : 2;
}
