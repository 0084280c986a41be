#include "topoplan/propositions.hpp"

#include <algorithm>

#include "topoplan/errors.hpp"

namespace topoplan {

PropSet::PropSet(std::vector<std::string> names) : names_(std::move(names)) {
    std::sort(names_.begin(), names_.end());
    auto dup = std::adjacent_find(names_.begin(), names_.end());
    if (dup != names_.end()) {
        throw ValidationError("duplicate proposition identifier: " + *dup);
    }
    if (names_.size() > 20) {
        throw ValidationError("proposition set too large for explicit alphabet expansion");
    }
}

int PropSet::index_of(std::string_view name) const {
    auto it = std::lower_bound(names_.begin(), names_.end(), name);
    if (it == names_.end() || *it != name) return -1;
    return static_cast<int>(it - names_.begin());
}

PropMask PropSet::mask_of(std::span<const std::string> symbol) const {
    PropMask m = 0;
    for (const auto& p : symbol) {
        int i = index_of(p);
        if (i < 0) throw ValidationError("unknown proposition: " + p);
        m |= PropMask{1} << i;
    }
    return m;
}

PropMask PropSet::mask_of(std::initializer_list<const char*> symbol) const {
    PropMask m = 0;
    for (const char* p : symbol) {
        int i = index_of(p);
        if (i < 0) throw ValidationError(std::string("unknown proposition: ") + p);
        m |= PropMask{1} << i;
    }
    return m;
}

std::vector<std::string> PropSet::names_of(PropMask mask) const {
    std::vector<std::string> out;
    for (std::size_t i = 0; i < names_.size(); ++i) {
        if (mask & (PropMask{1} << i)) out.push_back(names_[i]);
    }
    return out;
}

bool PropSet::includes(const PropSet& other) const {
    return std::all_of(other.names_.begin(), other.names_.end(),
                       [&](const std::string& n) { return contains(n); });
}

PropMask PropSet::project(PropMask mask, const PropSet& target) const {
    PropMask out = 0;
    for (std::size_t i = 0; i < names_.size(); ++i) {
        if (!(mask & (PropMask{1} << i))) continue;
        int j = target.index_of(names_[i]);
        if (j >= 0) out |= PropMask{1} << j;
    }
    return out;
}

}  // namespace topoplan
