#pragma once

#include <json.hpp>

#include "corpuskit/tweet.hpp"

// Shared by every component that embeds tweets inside a larger JSON envelope
// (corpus files, scenario timelines).
namespace corpuskit::detail {

using Json = nlohmann::ordered_json;

Json tweet_to_json(const TweetRecord& t);
TweetRecord tweet_from_json(const Json& j);

std::uint64_t get_u64(const Json& j, const char* key, const std::string& path);
std::string get_string(const Json& j, const char* key, const std::string& path);

}  // namespace corpuskit::detail
