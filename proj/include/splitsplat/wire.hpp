#pragma once

// Segmenter wire protocol: one JSON object per line.
//   request:  {"view_id": 3, "prompts": [[w, h], ...]}
//   response: {"W": 64, "H": 48, "mask": [runs...]}   or   {"error": "..."}
// `mask` is a row-major run-length encoding of the binary mask: alternating run lengths starting
// with a run of zeros (possibly of length 0).

#include <string>
#include <vector>

#include "splitsplat/scene.hpp"

namespace splitsplat::wire {

struct Request {
    int view_id = 0;
    std::vector<Vec2> prompts;
};

std::vector<std::uint32_t> rle_encode(const Mask& m);
/// Throws Error when the runs do not sum to width*height.
Mask rle_decode(const std::vector<std::uint32_t>& runs, int width, int height);

std::string encode_request(const Request& r);
Request decode_request(const std::string& line);

std::string encode_response(const Mask& m);
std::string encode_error(const std::string& message);
/// Throws Error on malformed lines and on error responses.
Mask decode_response(const std::string& line);

}  // namespace splitsplat::wire
