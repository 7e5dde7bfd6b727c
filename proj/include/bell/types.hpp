#pragma once

// Shared vocabulary for the two-party Bell experiment: two measurement
// settings per side and the four setting pairs ("contexts") they form.
// The canonical context order is (x,y), (x,y'), (x',y), (x',y').

#include <array>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace bell {

enum class Side : std::uint8_t { alice = 0, bob = 1 };

// Which of a side's two settings is in use.  "prime" is x'/y'.
enum class SettingLabel : std::uint8_t { plain = 0, prime = 1 };

enum class ContextId : std::uint8_t { xy = 0, xyp = 1, xpy = 2, xpyp = 3 };

inline constexpr std::array<ContextId, 4> all_contexts = {
    ContextId::xy, ContextId::xyp, ContextId::xpy, ContextId::xpyp};

// Flat index for the four (side, label) instrument slots:
// 0 = alice x, 1 = alice x', 2 = bob y, 3 = bob y'.
enum class SettingSlot : std::uint8_t { ax = 0, axp = 1, by = 2, byp = 3 };

inline constexpr std::array<SettingSlot, 4> all_slots = {
    SettingSlot::ax, SettingSlot::axp, SettingSlot::by, SettingSlot::byp};

constexpr std::size_t idx(ContextId c) { return static_cast<std::size_t>(c); }
constexpr std::size_t idx(SettingSlot s) { return static_cast<std::size_t>(s); }
constexpr std::size_t idx(Side s) { return static_cast<std::size_t>(s); }
constexpr std::size_t idx(SettingLabel l) { return static_cast<std::size_t>(l); }

constexpr SettingSlot make_slot(Side side, SettingLabel label) {
    return static_cast<SettingSlot>(2 * idx(side) + idx(label));
}

constexpr Side slot_side(SettingSlot s) { return static_cast<Side>(idx(s) / 2); }
constexpr SettingLabel slot_label(SettingSlot s) {
    return static_cast<SettingLabel>(idx(s) % 2);
}

constexpr SettingLabel alice_label(ContextId c) {
    return (c == ContextId::xy || c == ContextId::xyp) ? SettingLabel::plain
                                                       : SettingLabel::prime;
}
constexpr SettingLabel bob_label(ContextId c) {
    return (c == ContextId::xy || c == ContextId::xpy) ? SettingLabel::plain
                                                       : SettingLabel::prime;
}
constexpr SettingSlot alice_slot(ContextId c) {
    return make_slot(Side::alice, alice_label(c));
}
constexpr SettingSlot bob_slot(ContextId c) {
    return make_slot(Side::bob, bob_label(c));
}
constexpr ContextId make_context(SettingLabel a, SettingLabel b) {
    return static_cast<ContextId>(2 * idx(a) + idx(b));
}

inline std::string_view context_name(ContextId c) {
    switch (c) {
        case ContextId::xy: return "xy";
        case ContextId::xyp: return "xyp";
        case ContextId::xpy: return "xpy";
        case ContextId::xpyp: return "xpyp";
    }
    throw std::logic_error("context_name: bad ContextId");
}

inline std::optional<ContextId> context_from_name(std::string_view s) {
    if (s == "xy") return ContextId::xy;
    if (s == "xyp") return ContextId::xyp;
    if (s == "xpy") return ContextId::xpy;
    if (s == "xpyp") return ContextId::xpyp;
    return std::nullopt;
}

inline std::string_view setting_name(SettingSlot s) {
    switch (s) {
        case SettingSlot::ax: return "x";
        case SettingSlot::axp: return "xp";
        case SettingSlot::by: return "y";
        case SettingSlot::byp: return "yp";
    }
    throw std::logic_error("setting_name: bad SettingSlot");
}

inline std::optional<SettingSlot> setting_from_name(std::string_view s) {
    if (s == "x") return SettingSlot::ax;
    if (s == "xp") return SettingSlot::axp;
    if (s == "y") return SettingSlot::by;
    if (s == "yp") return SettingSlot::byp;
    return std::nullopt;
}

inline std::string_view side_name(Side s) {
    return s == Side::alice ? "alice" : "bob";
}

inline std::optional<Side> side_from_name(std::string_view s) {
    if (s == "alice") return Side::alice;
    if (s == "bob") return Side::bob;
    return std::nullopt;
}

// Outcomes are -1/+1; 0 marks "no detection" and is only legal in raw data.
using Outcome = int;

constexpr bool valid_outcome(Outcome o) { return o == -1 || o == 0 || o == 1; }
constexpr bool valid_sign(Outcome o) { return o == -1 || o == 1; }

// Domain errors: the request was well-formed but the data/model cannot
// support it (undefined statistic, incompatible dataset kind, ...).
struct domain_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Config errors: malformed recipes, files, or CLI parameters.
struct config_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

}  // namespace bell
