#pragma once

#include <optional>
#include <string>
#include <vector>

#include "splitlab/flow.hpp"

namespace splitlab {

/// Samples of a based map S^n -> Omega G. params holds the parameter points
/// embedded in R^3 (may be empty for ad-hoc sample sets).
struct ConnectionFamily {
    std::string name;
    std::string class_tag;  // homotopy class the family is claimed to represent
    int sphere_dim = 0;
    int basepoint = 0;
    std::vector<Eigen::Vector3d> params;
    std::vector<DiscreteLoop> samples;
};

void validate_family(const ConnectionFamily& f);

/// Vertices of the octahedron with each face subdivided `frequency` times,
/// pushed to the unit sphere. Vertex 0 is (0, 0, 1).
std::vector<Eigen::Vector3d> octahedral_sphere_grid(int frequency);

/// Generator of pi_2(Omega SU(2)): s -> X(s) = s . (i sigma), the loop
/// t -> exp(2 pi t X(s)) on the hemisphere opposite the basepoint, shrunk
/// through circles through I tangent to X(s) on the basepoint hemisphere.
ConnectionFamily su2_degree_generator_family(int resolution, int frequency = 4);

/// Block embedding g -> diag(g, I_k).
ConnectionFamily stabilize_family(const ConnectionFamily& f, int k);

/// Constant basepoint plus geodesic loops of the given weights (random conjugators).
ConnectionFamily geodesic_family(const std::vector<WeightVector>& weights, int n, unsigned seed,
                                 const std::string& name = "geodesic");
ConnectionFamily constant_family(const GroupSpec& spec, int samples, int n);

struct FamilySample {
    int index = 0;
    std::optional<WeightVector> weights;
    int u_A = 0;    // sum d_i^2
    int u_inf = 0;  // max |d_i|
    double flow_energy = 0.0;
    bool snapped = false;
    std::optional<WeightVector> oracle;  // Toeplitz splitting type when the loop is smooth enough
    std::string error;
};

struct FamilyReport {
    std::vector<FamilySample> per_sample;
    int sup_A = 0;
    int sup_inf = 0;
    double completeness = 0.0;  // fraction of samples with extracted weights
    int oracle_checked = 0;
    int oracle_disagreements = 0;
};

FamilyReport family_sup_energy(const ConnectionFamily& f, const FlowConfig& cfg);

struct SkeletonEnergy {
    std::vector<WeightVector> weights;
    int energy = 0;
};

SkeletonEnergy skeleton_energy(int bound_index, int r);

struct ZetaBound {
    int upper_bound = 0;  // min over families of sup_A; an upper bound only
    std::vector<int> family_sups;
    int best_family = 0;
};

ZetaBound zeta_upper_bound(const std::vector<ConnectionFamily>& families, const FlowConfig& cfg);

}  // namespace splitlab
