#pragma once

#include <string>

#include <httplib.h>

#include "waternav/globalplan.hpp"

namespace waternav {

// POSTs the Overpass query to an http(s) endpoint, or reads a cached
// response file when the endpoint is not a URL. Both paths go through the
// same parser, so a recorded response replays byte-identically.
inline WaterwayData fetch_waterways(const BoundingBox& bbox, const std::string& endpoint) {
    const bool is_url = endpoint.rfind("http://", 0) == 0 || endpoint.rfind("https://", 0) == 0;
    if (!is_url) return fetch_waterways_fixture(endpoint);

    const auto scheme_end = endpoint.find("://") + 3;
    const auto path_start = endpoint.find('/', scheme_end);
    const std::string base = path_start == std::string::npos ? endpoint : endpoint.substr(0, path_start);
    const std::string path = path_start == std::string::npos ? "/" : endpoint.substr(path_start);

    httplib::Client client(base);
    client.set_connection_timeout(10, 0);
    client.set_read_timeout(30, 0);
    const auto res = client.Post(path, "data=" + overpass_query(bbox),
                                 "application/x-www-form-urlencoded");
    if (!res) throw std::runtime_error("overpass: network failure contacting " + endpoint);
    if (res->status != 200)
        throw std::runtime_error("overpass: HTTP " + std::to_string(res->status));
    return parse_overpass_response(res->body);
}

}  // namespace waternav
