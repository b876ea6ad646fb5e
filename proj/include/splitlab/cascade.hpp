#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "splitlab/loopspace.hpp"

namespace splitlab {

using Vec3 = Eigen::Vector3d;

class ChainComplexError : public std::runtime_error {
  public:
    ChainComplexError(const std::string& msg, int deg) : std::runtime_error(msg), degree(deg) {}
    int degree;
};

class RefineResolutionError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

/// Torus: point (theta, phi, 0) with both coordinates mod 1, flat metric.
/// Sphere: unit vector in R^3 with the round metric.
enum class ModelManifold { Torus, Sphere };

struct AuxCritical {
    double param = 0.0;  // position on the circle in [0, 1); 0 on a point
    int index = 0;
};

/// A critical point (dim 0) or critical circle (dim 1) of h.
struct CriticalManifold {
    std::string name;
    int dim = 0;
    int mb_index = 0;
    double level = 0.0;
    std::function<Vec3(double)> embed;         // circle parameter -> point
    std::function<double(const Vec3&)> locate;  // nearby point -> circle parameter
    std::function<double(double)> aux_slope;    // d aux / d param (circles only)
    std::vector<AuxCritical> aux;
    // Unit normal directions along which h decreases, at a circle parameter;
    // for an isolated maximum of a surface, an orthonormal tangent basis.
    std::function<std::vector<Vec3>(double)> unstable_normals;
};

struct MorseBottProblem {
    std::string id;
    ModelManifold manifold = ModelManifold::Torus;
    std::function<double(const Vec3&)> h;
    std::function<Vec3(const Vec3&)> grad;  // Riemannian gradient, tangent
    std::vector<CriticalManifold> critical;
    double grad_tol = 1e-9;
    int shooting_samples = 96;
};

/// "torus", "sphere-perfect", "sphere-z2".
MorseBottProblem builtin_problem(const std::string& id);
std::vector<std::string> builtin_problem_ids();

/// Checks h is critical exactly on the listed manifolds by sampling |grad h|.
void validate_problem(const MorseBottProblem& p, int samples = 2000);

struct Trajectory {
    std::vector<Vec3> points;
    std::vector<double> levels;
    int arrival = -1;  // index into critical, -1 if none reached
    bool converged = false;
    double length = 0.0;
};

/// direction = +1 follows -grad h, -1 follows +grad h.
Trajectory gradient_trajectory(const MorseBottProblem& p, const Vec3& x0, int direction = 1,
                               double length_cap = 50.0);

struct Generator {
    int manifold = 0;
    int aux = 0;  // index into the manifold's aux list
    int degree = 0;
    std::string label;
};

std::vector<Generator> cascade_generators(const MorseBottProblem& p);

/// Mod-2 count of cascade lines from p to q; requires deg p - deg q = 1.
int count_cascades(const MorseBottProblem& problem, const Generator& p, const Generator& q);

/// Matrices over the two-element field: differential[k](i, j) is the
/// coefficient of generator i of degree k-1 in d(generator j of degree k).
struct CascadeComplexData {
    std::vector<Generator> generators;
    std::map<int, Eigen::Matrix<std::uint8_t, Eigen::Dynamic, Eigen::Dynamic>> differential;
    std::vector<int> betti;  // by degree, from 0
};

CascadeComplexData build_cascade_complex(const MorseBottProblem& p);
std::vector<int> cascade_homology(const MorseBottProblem& p);

int rank_mod2(Eigen::Matrix<std::uint8_t, Eigen::Dynamic, Eigen::Dynamic> m);
std::vector<int> homology_mod2(const CascadeComplexData& c);

/// Real dimensions of the Schubert cells of U(r)/Z(d), Z(d) the centralizer of diag(d).
std::vector<int> schubert_cell_dims(const WeightVector& d);

/// Symbolic complex of the loop-space critical manifolds: generator (d, cell)
/// in degree morse_index(d) + dim cell, zero differential.
CascadeComplexData perfect_complex_for_weights(int r, int index_bound);

}  // namespace splitlab
