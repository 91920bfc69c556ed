#include "sentiflow/common/http.hpp"

#include <httplib.h>

#include <cctype>
#include <thread>

#include "sentiflow/common/error.hpp"

namespace sentiflow::http {

Url split_url(const std::string& url) {
    const auto scheme_end = url.find("://");
    if (scheme_end == std::string::npos) throw ValidationError("URL lacks a scheme: '" + url + "'");
    const auto path_start = url.find('/', scheme_end + 3);
    if (path_start == std::string::npos) return {url, "/"};
    return {url.substr(0, path_start), url.substr(path_start)};
}

std::string url_encode(const std::string& s) {
    static const char* hex = "0123456789ABCDEF";
    std::string out;
    for (unsigned char c : s) {
        if (std::isalnum(c) || c == '-' || c == '_' || c == '.' || c == '~') {
            out.push_back(static_cast<char>(c));
        } else {
            out.push_back('%');
            out.push_back(hex[c >> 4]);
            out.push_back(hex[c & 15]);
        }
    }
    return out;
}

HttplibTransport::HttplibTransport(std::chrono::seconds timeout) : timeout_(timeout) {}

namespace {

template <typename Call>
Response perform(const std::string& url, std::chrono::seconds timeout, Call&& call) {
    const auto parts = split_url(url);
    httplib::Client client(parts.scheme_host_port);
    client.set_connection_timeout(timeout);
    client.set_read_timeout(timeout);
    client.set_follow_location(true);
    auto result = call(client, parts.path_and_query);
    if (!result) throw TransportError(parts.scheme_host_port, "request failed: " + httplib::to_string(result.error()));
    return Response{result->status, result->body};
}

}  // namespace

Response HttplibTransport::get(const std::string& url) {
    return perform(url, timeout_, [](httplib::Client& c, const std::string& path) {
        return c.Get(path, httplib::Headers{{"User-Agent", "sentiflow/1.0"}});
    });
}

Response HttplibTransport::post_json(const std::string& url, const std::string& body) {
    return perform(url, timeout_, [&body](httplib::Client& c, const std::string& path) {
        return c.Post(path, body, "application/json");
    });
}

Sleeper real_sleeper() {
    return [](std::chrono::milliseconds d) { std::this_thread::sleep_for(d); };
}

}  // namespace sentiflow::http
