#include <stdio.h>
#include <string.h>
#include "sidewalk_audit.h"

#define CHECK(cond) do { if (!(cond)) { fprintf(stderr, "failed: %s (line %d)\n", #cond, __LINE__); return 1; } } while (0)

int main(void) {
    double w = 0.0;
    CHECK(swa_severity_weight(3, &w) == SWA_STATUS_OK && w == 1.0);
    CHECK(swa_severity_weight(0, &w) == SWA_STATUS_INVALID_ARGUMENT);
    CHECK(swa_last_error_message() != NULL);

    double raw[3] = {-2.0, -0.5, 0.4};
    double norm[3];
    CHECK(swa_normalize_scores(raw, 3, norm) == SWA_STATUS_OK);
    CHECK(norm[0] < norm[1] && norm[1] < norm[2]);

    double a[4] = {1, 2, 3, 4}, c[4] = {2, 2, 2, 2}, rho, p;
    CHECK(swa_spearman(a, a, 4, &rho, &p) == SWA_STATUS_OK && rho > 0.999999);
    CHECK(swa_spearman(a, c, 4, &rho, &p) == SWA_STATUS_UNDEFINED);

    SwaDescriptive d;
    CHECK(swa_descriptive_stats(a, 4, &d) == SWA_STATUS_OK && d.n == 4 && d.mean == 2.5);

    const char *geojson =
        "{\"type\":\"FeatureCollection\",\"features\":[{\"type\":\"Feature\","
        "\"properties\":{\"highway\":\"residential\"},\"geometry\":{\"type\":\"LineString\","
        "\"coordinates\":[[76.7794,30.7333],[76.7804,30.7333]]}}]}";
    SwaNetwork *net = NULL;
    CHECK(swa_network_load(geojson, &net) == SWA_STATUS_OK);
    CHECK(swa_network_edge_count(net) == 1);
    uint32_t origin;
    CHECK(swa_network_nearest_node(net, 30.7333, 76.7794, &origin) == SWA_STATUS_OK);
    SwaTrace *trace = NULL;
    CHECK(swa_trace_paths(net, origin, 500.0, &trace) == SWA_STATUS_OK);
    uint32_t edges[4];
    CHECK(swa_trace_edges(trace, edges, 4) == SWA_STATUS_OK && swa_trace_edge_count(trace) == 1);
    swa_trace_free(trace);
    swa_network_free(net);

    SwaTaxonomy *tax = swa_taxonomy_builtin();
    char *prompt = NULL;
    CHECK(swa_build_prompt(tax, "secondary", &prompt) == SWA_STATUS_OK);
    CHECK(strstr(prompt, "curb ramps") != NULL);
    swa_string_free(prompt);
    swa_taxonomy_free(tax);

    puts("ok");
    return 0;
}
