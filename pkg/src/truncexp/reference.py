"""Benchmark reference values for the simulation tables.

Layout: keyed by (design_id, noise, eta).  RMSE-table entries are multiplied
by 100, matching the convention of the original tables; coverage is in
percent; bandwidths and interval half-lengths are in covariate/outcome units.
"""

HOMO = "homoskedastic"
HET = "heteroskedastic"

# (design, noise, eta) -> dict(rmse_infeasible, rmse_feasible, distance)  [x100]
TABLE1 = {}
_T1 = {
    (HOMO, 0.2): ((5.044, 5.002, 5.146), (5.273, 5.222, 4.965), (0.563, 0.569, 0.575)),
    (HOMO, 0.5): ((4.094, 4.068, 4.134), (4.202, 4.174, 4.041), (0.277, 0.280, 0.282)),
    (HOMO, 0.8): ((3.742, 3.721, 3.759), (3.804, 3.782, 3.707), (0.164, 0.165, 0.166)),
    (HET, 0.2): ((5.095, 5.032, 5.177), (5.306, 5.236, 5.006), (0.548, 0.551, 0.556)),
    (HET, 0.5): ((4.126, 4.091, 4.157), (4.230, 4.192, 4.070), (0.271, 0.271, 0.273)),
    (HET, 0.8): ((3.766, 3.742, 3.782), (3.825, 3.800, 3.731), (0.161, 0.160, 0.161)),
}
for (noise, eta), (inf, feas, dist) in _T1.items():
    for d in (1, 2, 3):
        TABLE1[(d, noise, eta)] = {
            "rmse_infeasible": inf[d - 1],
            "rmse_feasible": feas[d - 1],
            "distance": dist[d - 1],
        }

# (design, noise, eta) -> dict with coverage/bandwidth/ci_length per estimator
TABLE2 = {}
_T2 = {
    (HOMO, 0.2): ((92.1, 92.4, 96.1), (0.373, 0.372, 0.369), (0.099, 0.099, 0.099),
                  (92.1, 92.3, 96.1), (0.366, 0.368, 0.374), (0.100, 0.100, 0.098)),
    (HOMO, 0.5): ((93.5, 93.7, 96.0), (0.334, 0.334, 0.333), (0.080, 0.080, 0.080),
                  (93.6, 93.8, 95.9), (0.331, 0.332, 0.335), (0.081, 0.081, 0.080)),
    (HOMO, 0.8): ((94.4, 94.6, 95.7), (0.319, 0.319, 0.318), (0.073, 0.073, 0.073),
                  (94.4, 94.5, 95.9), (0.318, 0.318, 0.320), (0.074, 0.074, 0.073)),
    (HET, 0.2): ((92.1, 92.7, 96.3), (0.382, 0.384, 0.379), (0.100, 0.100, 0.100),
                 (92.5, 93.0, 96.1), (0.375, 0.380, 0.385), (0.101, 0.101, 0.099)),
    (HET, 0.5): ((93.4, 93.8, 96.2), (0.341, 0.344, 0.341), (0.081, 0.081, 0.081),
                 (93.6, 94.0, 96.0), (0.337, 0.342, 0.344), (0.081, 0.081, 0.080)),
    (HET, 0.8): ((94.4, 94.6, 95.8), (0.325, 0.328, 0.326), (0.074, 0.074, 0.074),
                 (94.4, 94.6, 95.8), (0.323, 0.327, 0.328), (0.074, 0.074, 0.074)),
}
for (noise, eta), row in _T2.items():
    ci, bi, li, cf, bf, lf = row
    for d in (1, 2, 3):
        TABLE2[(d, noise, eta)] = {
            "coverage_infeasible": ci[d - 1],
            "bandwidth_infeasible": bi[d - 1],
            "ci_length_infeasible": li[d - 1],
            "coverage_feasible": cf[d - 1],
            "bandwidth_feasible": bf[d - 1],
            "ci_length_feasible": lf[d - 1],
        }

TABLE_F1 = {}
_TF1 = {
    (HOMO, 0.2): ((93.6, 92.1, 95.4), (0.231, 0.310, 0.257), (0.128, 0.113, 0.120),
                  (93.4, 92.2, 95.7), (0.227, 0.307, 0.260), (0.128, 0.113, 0.119)),
    (HOMO, 0.5): ((95.0, 93.1, 96.0), (0.207, 0.279, 0.231), (0.104, 0.091, 0.098),
                  (94.9, 93.3, 96.1), (0.204, 0.277, 0.233), (0.104, 0.092, 0.098)),
    (HOMO, 0.8): ((95.7, 94.0, 96.2), (0.197, 0.266, 0.222), (0.095, 0.083, 0.089),
                  (95.7, 94.0, 96.4), (0.196, 0.265, 0.222), (0.095, 0.084, 0.089)),
    (HET, 0.2): ((93.4, 92.6, 95.6), (0.239, 0.310, 0.250), (0.129, 0.115, 0.123),
                 (93.5, 92.9, 95.8), (0.235, 0.307, 0.254), (0.129, 0.116, 0.122)),
    (HET, 0.5): ((95.0, 93.6, 96.5), (0.213, 0.277, 0.225), (0.104, 0.093, 0.100),
                 (95.1, 93.7, 96.5), (0.210, 0.276, 0.227), (0.105, 0.094, 0.100)),
    (HET, 0.8): ((95.7, 94.3, 96.6), (0.202, 0.264, 0.215), (0.095, 0.085, 0.091),
                 (95.7, 94.3, 96.7), (0.201, 0.263, 0.216), (0.096, 0.085, 0.092)),
}
for (noise, eta), row in _TF1.items():
    ci, bi, li, cf, bf, lf = row
    for d in (1, 2, 3):
        TABLE_F1[(d, noise, eta)] = {
            "coverage_infeasible": ci[d - 1],
            "bandwidth_infeasible": bi[d - 1],
            "ci_length_infeasible": li[d - 1],
            "coverage_feasible": cf[d - 1],
            "bandwidth_feasible": bf[d - 1],
            "ci_length_feasible": lf[d - 1],
        }
