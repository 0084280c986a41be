#pragma once

#include <span>
#include <vector>

#include "topoplan/grid_world.hpp"
#include "topoplan/mdp.hpp"

namespace topoplan {

// Gaussian-kernel basis over MDP states: feature j of state s is
// exp(-SP(s, c_j)^2 / (2 sigma^2)) with SP the BFS shortest-path distance on
// the positive-probability move graph. Absorbing states (obstacles) are
// non-traversable; states unreachable from a center get feature 0 there.
class KernelBasis {
public:
    KernelBasis() = default;
    KernelBasis(const LabeledMdp& m, std::vector<int> centers, double sigma);

    int size() const { return static_cast<int>(centers_.size()); }
    double sigma() const { return sigma_; }
    const std::vector<int>& centers() const { return centers_; }

    // Feature vector of a state; K(c_j, c_j) = 1.
    std::span<const double> features(int s) const {
        return {features_[static_cast<std::size_t>(s)].data(), features_[static_cast<std::size_t>(s)].size()};
    }

    // BFS distance from center j to s, or -1 when unreachable.
    int distance(int center_index, int s) const {
        return distances_[static_cast<std::size_t>(center_index)][static_cast<std::size_t>(s)];
    }

    bool traversable(int s) const { return traversable_[static_cast<std::size_t>(s)] != 0; }

    double dot(int s, std::span<const double> theta) const;

private:
    std::vector<int> centers_;
    double sigma_ = 1.0;
    std::vector<char> traversable_;
    std::vector<std::vector<int>> distances_;     // [center][state]
    std::vector<std::vector<double>> features_;   // [state][center]
};

std::vector<double> kernel_feature(const KernelBasis& basis, int s);

// Non-obstacle cells on the interval lattice (x % interval == 0 and
// y % interval == 0).
std::vector<int> grid_centers(const GridWorldSpec& spec, int interval);

}  // namespace topoplan
