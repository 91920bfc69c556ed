#pragma once

#include <chrono>
#include <functional>
#include <memory>
#include <string>

namespace sentiflow::http {

struct Response {
    int status = 0;
    std::string body;
};

// Minimal blocking transport. Implementations throw TransportError when the
// remote end cannot be reached; HTTP error statuses are returned, not thrown.
class Transport {
public:
    virtual ~Transport() = default;
    virtual Response get(const std::string& url) = 0;
    virtual Response post_json(const std::string& url, const std::string& body) = 0;
};

// cpp-httplib backed transport; supports http:// and https:// URLs.
class HttplibTransport final : public Transport {
public:
    explicit HttplibTransport(std::chrono::seconds timeout = std::chrono::seconds{30});
    Response get(const std::string& url) override;
    Response post_json(const std::string& url, const std::string& body) override;

private:
    std::chrono::seconds timeout_;
};

struct Url {
    std::string scheme_host_port;  // e.g. "https://example.com:443"
    std::string path_and_query;    // always starts with '/'
};
Url split_url(const std::string& url);

std::string url_encode(const std::string& s);

// Sleeps for the requested duration; replaceable in tests.
using Sleeper = std::function<void(std::chrono::milliseconds)>;
Sleeper real_sleeper();

}  // namespace sentiflow::http
