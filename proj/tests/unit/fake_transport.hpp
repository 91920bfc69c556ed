#pragma once

#include <deque>
#include <mutex>
#include <string>
#include <vector>

#include "sentiflow/common/error.hpp"
#include "sentiflow/common/http.hpp"

namespace testutil {

// Scripted transport: responses are consumed in order; requests are recorded.
class FakeTransport : public sentiflow::http::Transport {
public:
    void push(int status, std::string body) { queue_.push_back({status, std::move(body)}); }
    void fail_next() { queue_.push_back({-1, ""}); }

    sentiflow::http::Response get(const std::string& url) override { return take(url); }
    sentiflow::http::Response post_json(const std::string& url, const std::string& body) override {
        posted.push_back(body);
        return take(url);
    }

    std::vector<std::string> urls;
    std::vector<std::string> posted;

private:
    sentiflow::http::Response take(const std::string& url) {
        std::lock_guard lock(mu_);
        urls.push_back(url);
        if (queue_.empty()) return {200, R"({"feed": []})"};
        auto r = queue_.front();
        queue_.pop_front();
        if (r.status < 0) throw sentiflow::TransportError("fake", "connection refused");
        return r;
    }

    std::deque<sentiflow::http::Response> queue_;
    std::mutex mu_;
};

}  // namespace testutil
