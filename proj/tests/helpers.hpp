// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <atomic>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <thread>

#define CPPHTTPLIB_OPENSSL_SUPPORT
#include <httplib.h>

namespace tjtest {

inline std::filesystem::path fixture_dir() {
    const char* dir = std::getenv("TOKENJOULE_FIXTURE_DIR");
    return dir != nullptr ? std::filesystem::path(dir) : std::filesystem::path("fixtures");
}

inline std::string cli_path() {
    const char* path = std::getenv("TOKENJOULE_CLI");
    return path != nullptr ? std::string(path) : std::string();
}

class TempDir {
  public:
    TempDir() {
        auto pattern = (std::filesystem::temp_directory_path() / "tokenjoule-XXXXXX").string();
        if (mkdtemp(pattern.data()) == nullptr) throw std::runtime_error("mkdtemp failed");
        path_ = pattern;
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    const std::filesystem::path& path() const { return path_; }
    std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

  private:
    std::filesystem::path path_;
};

inline void write_file(const std::filesystem::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    out << content;
}

inline std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream out;
    out << in.rdbuf();
    return out.str();
}

inline bool approx_rel(double a, double b, double rel) {
    const double scale = std::max(std::abs(a), std::abs(b));
    return scale == 0.0 || std::abs(a - b) <= rel * scale;
}

/// Local chat-completion server with a swappable handler.
class MockChatServer {
  public:
    using Handler = std::function<void(const httplib::Request&, httplib::Response&)>;

    MockChatServer() {
        server_.Post("/v1/chat/completions",
                     [this](const httplib::Request& req, httplib::Response& res) {
                         ++hits_;
                         handler_(req, res);
                     });
        port_ = server_.bind_to_any_port("127.0.0.1");
        thread_ = std::thread([this] { server_.listen_after_bind(); });
        server_.wait_until_ready();
    }

    ~MockChatServer() {
        server_.stop();
        if (thread_.joinable()) thread_.join();
    }

    void set_handler(Handler handler) { handler_ = std::move(handler); }
    std::string base_url() const { return "http://127.0.0.1:" + std::to_string(port_); }
    int hits() const { return hits_.load(); }

    /// Canned OpenAI-style completion body.
    static std::string completion_body(long prompt_tokens, long completion_tokens,
                                       const std::string& content = "benchmark response") {
        std::ostringstream out;
        out << R"({"choices":[{"message":{"role":"assistant","content":")" << content
            << R"("}}],"usage":{"prompt_tokens":)" << prompt_tokens << R"(,"completion_tokens":)"
            << completion_tokens << "}}";
        return out.str();
    }

  private:
    httplib::Server server_;
    std::thread thread_;
    int port_ = 0;
    std::atomic<int> hits_{0};
    Handler handler_ = [](const httplib::Request&, httplib::Response& res) {
        res.set_content(completion_body(10, 20), "application/json");
    };
};

/// Runs a command, returning (exit_code, combined stdout).
inline std::pair<int, std::string> run_command(const std::string& command) {
    FILE* pipe = popen((command + " 2>&1").c_str(), "r");
    if (pipe == nullptr) throw std::runtime_error("popen failed");
    std::string output;
    char buf[512];
    while (fgets(buf, sizeof(buf), pipe) != nullptr) output += buf;
    const int status = pclose(pipe);
    return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, output};
}

}  // namespace tjtest
