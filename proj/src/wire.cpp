#include "splitsplat/wire.hpp"

#include <json.hpp>

namespace splitsplat::wire {

using nlohmann::json;

std::vector<std::uint32_t> rle_encode(const Mask& m) {
    std::vector<std::uint32_t> runs;
    std::uint8_t current = 0;
    std::uint32_t len = 0;
    for (auto v : m.data) {
        const std::uint8_t b = v ? 1 : 0;
        if (b != current) {
            runs.push_back(len);
            current = b;
            len = 0;
        }
        ++len;
    }
    runs.push_back(len);
    return runs;
}

Mask rle_decode(const std::vector<std::uint32_t>& runs, int width, int height) {
    if (width < 0 || height < 0) throw Error("rle: negative dimensions");
    Mask m(width, height, 0);
    std::size_t pos = 0;
    std::uint8_t value = 0;
    for (std::uint32_t r : runs) {
        if (pos + r > m.data.size()) throw Error("rle: runs exceed mask size");
        std::fill_n(m.data.begin() + static_cast<std::ptrdiff_t>(pos), r, value);
        pos += r;
        value ^= 1;
    }
    if (pos != m.data.size()) throw Error("rle: runs do not cover the mask");
    return m;
}

std::string encode_request(const Request& r) {
    json j;
    j["view_id"] = r.view_id;
    j["prompts"] = json::array();
    for (const auto& p : r.prompts) j["prompts"].push_back({p.x(), p.y()});
    return j.dump();
}

Request decode_request(const std::string& line) {
    try {
        const json j = json::parse(line);
        Request r;
        r.view_id = j.at("view_id").get<int>();
        for (const auto& p : j.at("prompts")) r.prompts.emplace_back(p.at(0).get<double>(), p.at(1).get<double>());
        return r;
    } catch (const json::exception& e) {
        throw Error(std::string("malformed segmenter request: ") + e.what());
    }
}

std::string encode_response(const Mask& m) {
    json j;
    j["W"] = m.width;
    j["H"] = m.height;
    j["mask"] = rle_encode(m);
    return j.dump();
}

std::string encode_error(const std::string& message) { return json{{"error", message}}.dump(); }

Mask decode_response(const std::string& line) {
    json j;
    try {
        j = json::parse(line);
    } catch (const json::exception& e) {
        throw Error(std::string("malformed segmenter response: ") + e.what());
    }
    if (j.contains("error")) throw Error("segmenter reported: " + j["error"].dump());
    try {
        return rle_decode(j.at("mask").get<std::vector<std::uint32_t>>(), j.at("W").get<int>(), j.at("H").get<int>());
    } catch (const json::exception& e) {
        throw Error(std::string("malformed segmenter response: ") + e.what());
    }
}

}  // namespace splitsplat::wire
