#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

namespace egosod {

/// The eight social cues. Enumerator order is the serialization order.
enum class Cue : std::uint8_t { osad = 0, stad, aud, udsd, pad, igd, ogd, sfd };

inline constexpr std::size_t kCueCount = 8;

inline constexpr std::array<Cue, kCueCount> kAllCues = {
    Cue::osad, Cue::stad, Cue::aud, Cue::udsd, Cue::pad, Cue::igd, Cue::ogd, Cue::sfd};

constexpr std::size_t index_of(Cue cue) noexcept { return static_cast<std::size_t>(cue); }

/// Lowercase identifier used in JSON keys ("osad", ...).
std::string_view cue_key(Cue cue) noexcept;
/// Uppercase acronym ("OSAD", ...).
std::string_view cue_acronym(Cue cue) noexcept;
/// The annotation question, e.g. "Is someone talking to me?".
std::string_view cue_question(Cue cue) noexcept;
/// Accepts either the key or the acronym, case-insensitive.
std::optional<Cue> parse_cue(std::string_view text) noexcept;

bool is_audio_cue(Cue cue) noexcept;
inline bool is_visual_cue(Cue cue) noexcept { return !is_audio_cue(cue); }

/// A small set of cues backed by a bitmask.
class CueSet {
public:
    constexpr CueSet() = default;

    static constexpr CueSet all() noexcept { return CueSet(0xFFu); }
    static constexpr CueSet none() noexcept { return CueSet(0u); }
    static constexpr CueSet audio() noexcept { return CueSet(0x0Fu); }
    static constexpr CueSet visual() noexcept { return CueSet(0xF0u); }

    constexpr bool contains(Cue cue) const noexcept { return (bits_ >> index_of(cue)) & 1u; }
    constexpr void insert(Cue cue) noexcept { bits_ |= static_cast<std::uint8_t>(1u << index_of(cue)); }
    constexpr void erase(Cue cue) noexcept { bits_ &= static_cast<std::uint8_t>(~(1u << index_of(cue))); }
    constexpr bool empty() const noexcept { return bits_ == 0; }
    constexpr std::uint8_t bits() const noexcept { return bits_; }
    int size() const noexcept;

    constexpr bool operator==(const CueSet&) const = default;

private:
    constexpr explicit CueSet(std::uint8_t bits) : bits_(bits) {}
    std::uint8_t bits_ = 0;
};

/// Eight boolean cue values (ground truth, consensus, or effective graph inputs).
class CueVector {
public:
    constexpr CueVector() = default;

    /// Bit i of `bits` is the value of the cue with index i.
    static constexpr CueVector from_bits(std::uint8_t bits) noexcept {
        CueVector v;
        for (std::size_t i = 0; i < kCueCount; ++i) {
            v.values_[i] = (bits >> i) & 1u;
        }
        return v;
    }

    constexpr std::uint8_t to_bits() const noexcept {
        std::uint8_t bits = 0;
        for (std::size_t i = 0; i < kCueCount; ++i) {
            if (values_[i]) bits |= static_cast<std::uint8_t>(1u << i);
        }
        return bits;
    }

    constexpr bool operator[](Cue cue) const noexcept { return values_[index_of(cue)]; }
    constexpr bool& operator[](Cue cue) noexcept { return values_[index_of(cue)]; }

    constexpr bool operator==(const CueVector&) const = default;

private:
    std::array<bool, kCueCount> values_{};
};

}  // namespace egosod
