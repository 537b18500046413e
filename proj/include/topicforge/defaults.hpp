#ifndef TOPICFORGE_DEFAULTS_HPP
#define TOPICFORGE_DEFAULTS_HPP

#include <cstddef>
#include <string_view>

namespace topicforge::defaults {

inline constexpr std::string_view kMetadataKeyword = "social";
inline constexpr std::size_t kMinNoteLength = 30;
inline constexpr std::size_t kMinDocumentFrequency = 2;
inline constexpr std::size_t kTopEnrichedWords = 5;
inline constexpr double kFrequentWordFraction = 0.5;
inline constexpr std::size_t kMinTopics = 10;
inline constexpr std::size_t kMaxTopics = 50;
inline constexpr std::size_t kTopWords = 10;
inline constexpr std::size_t kStudyRepeats = 5;
inline constexpr std::size_t kNeighbors = 20;
inline constexpr std::size_t kCoherenceWindow = 110;

}  // namespace topicforge::defaults

#endif  // TOPICFORGE_DEFAULTS_HPP
