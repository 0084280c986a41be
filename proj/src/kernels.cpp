#include "topoplan/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <deque>

#include "topoplan/errors.hpp"

namespace topoplan {

KernelBasis::KernelBasis(const LabeledMdp& m, std::vector<int> centers, double sigma)
    : centers_(std::move(centers)), sigma_(sigma) {
    if (centers_.empty()) throw ValidationError("kernel basis needs at least one center");
    if (!(sigma_ > 0)) throw ValidationError("kernel width must be positive");
    for (int c : centers_) {
        if (c < 0 || c >= m.n_states) throw ValidationError("kernel center outside the state space");
    }

    // A state is traversable unless it is absorbing under every action.
    traversable_.assign(static_cast<std::size_t>(m.n_states), 0);
    for (int s = 0; s < m.n_states; ++s) {
        bool absorbing = true;
        for (int a = 0; a < m.n_actions && absorbing; ++a) {
            if (!m.action_available(s, a)) continue;
            for (const Outcome& o : m.rows[static_cast<std::size_t>(s)][static_cast<std::size_t>(a)]) {
                if (o.state != s && o.prob > 0) {
                    absorbing = false;
                    break;
                }
            }
        }
        traversable_[static_cast<std::size_t>(s)] = absorbing ? 0 : 1;
    }

    // Symmetric move graph over traversable states.
    std::vector<std::vector<int>> adj(static_cast<std::size_t>(m.n_states));
    for (int s = 0; s < m.n_states; ++s) {
        if (!traversable_[static_cast<std::size_t>(s)]) continue;
        for (int a = 0; a < m.n_actions; ++a) {
            if (!m.action_available(s, a)) continue;
            for (const Outcome& o : m.rows[static_cast<std::size_t>(s)][static_cast<std::size_t>(a)]) {
                if (o.prob <= 0 || o.state == s) continue;
                if (!traversable_[static_cast<std::size_t>(o.state)]) continue;
                auto& row = adj[static_cast<std::size_t>(s)];
                if (std::find(row.begin(), row.end(), o.state) == row.end()) {
                    row.push_back(o.state);
                    adj[static_cast<std::size_t>(o.state)].push_back(s);
                }
            }
        }
    }
    for (auto& row : adj) {
        std::sort(row.begin(), row.end());
        row.erase(std::unique(row.begin(), row.end()), row.end());
    }

    distances_.assign(centers_.size(), std::vector<int>(static_cast<std::size_t>(m.n_states), -1));
    for (std::size_t j = 0; j < centers_.size(); ++j) {
        auto& dist = distances_[j];
        int c = centers_[j];
        if (!traversable_[static_cast<std::size_t>(c)]) continue;
        dist[static_cast<std::size_t>(c)] = 0;
        std::deque<int> frontier{c};
        while (!frontier.empty()) {
            int u = frontier.front();
            frontier.pop_front();
            for (int v : adj[static_cast<std::size_t>(u)]) {
                if (dist[static_cast<std::size_t>(v)] < 0) {
                    dist[static_cast<std::size_t>(v)] = dist[static_cast<std::size_t>(u)] + 1;
                    frontier.push_back(v);
                }
            }
        }
    }

    features_.assign(static_cast<std::size_t>(m.n_states), std::vector<double>(centers_.size(), 0.0));
    const double denom = 2.0 * sigma_ * sigma_;
    for (int s = 0; s < m.n_states; ++s) {
        for (std::size_t j = 0; j < centers_.size(); ++j) {
            int d = distances_[j][static_cast<std::size_t>(s)];
            if (d < 0) continue;  // unreachable: feature stays 0
            features_[static_cast<std::size_t>(s)][j] =
                std::exp(-static_cast<double>(d) * static_cast<double>(d) / denom);
        }
    }
}

double KernelBasis::dot(int s, std::span<const double> theta) const {
    const auto& phi = features_[static_cast<std::size_t>(s)];
    double v = 0;
    for (std::size_t j = 0; j < phi.size(); ++j) v += phi[j] * theta[j];
    return v;
}

std::vector<double> kernel_feature(const KernelBasis& basis, int s) {
    auto f = basis.features(s);
    return {f.begin(), f.end()};
}

std::vector<int> grid_centers(const GridWorldSpec& spec, int interval) {
    if (interval <= 0) throw ValidationError("center interval must be positive");
    std::vector<int> centers;
    for (int y = 0; y < spec.height; y += interval) {
        for (int x = 0; x < spec.width; x += interval) {
            Cell c{x, y};
            if (spec.obstacles.count(c)) continue;
            centers.push_back(spec.cell_index(c));
        }
    }
    return centers;
}

}  // namespace topoplan
