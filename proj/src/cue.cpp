#include "egosod/cue.hpp"

#include <algorithm>
#include <bit>
#include <cctype>

namespace egosod {
namespace {

struct CueInfo {
    std::string_view key;
    std::string_view acronym;
    std::string_view question;
};

constexpr std::array<CueInfo, kCueCount> kCueInfo = {{
    {"osad", "OSAD", "Is someone else talking?"},
    {"stad", "STAD", "Are people talking in turns?"},
    {"aud", "AUD", "Is someone talking to me?"},
    {"udsd", "UDSD", "Am I talking?"},
    {"pad", "PAD", "Are people in personal space?"},
    {"igd", "IGD", "Is someone looking at me?"},
    {"ogd", "OGD", "Am I looking at someone?"},
    {"sfd", "SFD", "Am I focusing on something?"},
}};

bool iequals(std::string_view a, std::string_view b) {
    return a.size() == b.size() &&
           std::equal(a.begin(), a.end(), b.begin(), [](char x, char y) {
               return std::tolower(static_cast<unsigned char>(x)) ==
                      std::tolower(static_cast<unsigned char>(y));
           });
}

}  // namespace

std::string_view cue_key(Cue cue) noexcept { return kCueInfo[index_of(cue)].key; }
std::string_view cue_acronym(Cue cue) noexcept { return kCueInfo[index_of(cue)].acronym; }
std::string_view cue_question(Cue cue) noexcept { return kCueInfo[index_of(cue)].question; }

std::optional<Cue> parse_cue(std::string_view text) noexcept {
    for (Cue cue : kAllCues) {
        if (iequals(text, cue_key(cue))) return cue;
    }
    return std::nullopt;
}

bool is_audio_cue(Cue cue) noexcept { return CueSet::audio().contains(cue); }

int CueSet::size() const noexcept { return std::popcount(bits_); }

}  // namespace egosod
