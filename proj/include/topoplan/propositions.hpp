#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace topoplan {

// A symbol of the automaton alphabet: a subset of atomic propositions,
// encoded as a bitmask over a PropSet's canonical ordering.
using PropMask = std::uint32_t;

// Ordered set of atomic proposition identifiers. Names are kept sorted so
// equality is structural and masks are canonical.
class PropSet {
public:
    PropSet() = default;
    explicit PropSet(std::vector<std::string> names);

    std::size_t size() const { return names_.size(); }
    const std::vector<std::string>& names() const { return names_; }

    // Index of a proposition, or -1 if unknown.
    int index_of(std::string_view name) const;
    bool contains(std::string_view name) const { return index_of(name) >= 0; }

    // Mask for a symbol given as proposition names; throws on unknown names.
    PropMask mask_of(std::span<const std::string> symbol) const;
    PropMask mask_of(std::initializer_list<const char*> symbol) const;

    std::vector<std::string> names_of(PropMask mask) const;

    // All 2^|AP| symbols.
    std::size_t alphabet_size() const { return std::size_t{1} << names_.size(); }

    // True if every proposition of `other` is present here.
    bool includes(const PropSet& other) const;

    // Remaps a mask over this set onto a mask over `target` (propositions
    // absent from `target` are dropped).
    PropMask project(PropMask mask, const PropSet& target) const;

    bool operator==(const PropSet&) const = default;

private:
    std::vector<std::string> names_;
};

}  // namespace topoplan
