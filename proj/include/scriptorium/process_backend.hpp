#pragma once

#include <cerrno>
#include <csignal>
#include <cstring>
#include <stdexcept>
#include <string>
#include <vector>

#include <fcntl.h>
#include <poll.h>
#include <sys/types.h>
#include <sys/wait.h>
#include <unistd.h>

#include <nlohmann/json.hpp>

#include "scriptorium/backends.hpp"
#include "scriptorium/png_io.hpp"

namespace scriptorium {

struct ProtocolError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct BackendTimeout : ProtocolError {
    using ProtocolError::ProtocolError;
};
struct BackendExited : ProtocolError {
    using ProtocolError::ProtocolError;
};

// Bridge to an externally trained model speaking one JSON object per line
// over stdin/stdout:
//   request:  {"id": n, "op": "detect_lines"|"detect_words"|"classify"|"embed",
//              "image_path": s, "context": s}
//   response: {"id": n, "detections": [...]} | {"id": n, "candidates": [...]}
//             | {"id": n, "vector": [...]} | {"id": n, "error": s}
// Requests are serialized per child; crops are handed over as temporary PNG
// files named in image_path.
class ProcessBackend : public LineDetectorInterface,
                       public WordDetectorInterface,
                       public ClassifierInterface,
                       public EmbedderInterface {
public:
    explicit ProcessBackend(const std::string& command, size_t dim = kDefaultEmbeddingDim,
                            int timeout_ms = 60000, std::string scratch_dir = "/tmp")
        : dim_(dim), timeout_ms_(timeout_ms), scratch_dir_(std::move(scratch_dir)) {
        // A dead child must surface as BackendExited, not as SIGPIPE.
        signal(SIGPIPE, SIG_IGN);
        int to_child[2], from_child[2];
        if (pipe(to_child) != 0 || pipe(from_child) != 0)
            throw std::runtime_error("pipe() failed");
        pid_ = fork();
        if (pid_ < 0) throw std::runtime_error("fork() failed");
        if (pid_ == 0) {
            dup2(to_child[0], STDIN_FILENO);
            dup2(from_child[1], STDOUT_FILENO);
            close(to_child[0]);
            close(to_child[1]);
            close(from_child[0]);
            close(from_child[1]);
            execl("/bin/sh", "sh", "-c", command.c_str(), static_cast<char*>(nullptr));
            _exit(127);
        }
        close(to_child[0]);
        close(from_child[1]);
        stdin_fd_ = to_child[1];
        stdout_fd_ = from_child[0];
    }

    ~ProcessBackend() override { shutdown(); }

    ProcessBackend(const ProcessBackend&) = delete;
    ProcessBackend& operator=(const ProcessBackend&) = delete;

    std::vector<OrientedDetection> detect_lines(const Raster& page,
                                                const std::string& image_id) override {
        nlohmann::json resp = request("detect_lines", page, image_id);
        std::vector<OrientedDetection> out;
        for (const auto& d : resp.at("detections")) {
            auto v = d.at("obb").get<std::vector<double>>();
            if (v.size() != 8) throw ProtocolError("obb needs 8 values");
            OrientedBox b;
            for (int i = 0; i < 4; ++i) b.corners[i] = {v[2 * i], v[2 * i + 1]};
            out.push_back({b, checked_conf(d), 0});
        }
        return out;
    }

    std::vector<AxisDetection> detect_words(const Raster& line_crop,
                                            const std::string& context_id) override {
        nlohmann::json resp = request("detect_words", line_crop, context_id);
        std::vector<AxisDetection> out;
        for (const auto& d : resp.at("detections")) {
            auto v = d.at("box").get<std::vector<double>>();
            if (v.size() != 4) throw ProtocolError("box needs 4 values");
            out.push_back({{v[0], v[1], v[2], v[3]}, checked_conf(d), 0});
        }
        return out;
    }

    std::vector<Candidate> classify(const Raster& word_crop) override {
        nlohmann::json resp = request("classify", word_crop, "");
        std::vector<Candidate> out;
        for (const auto& c : resp.at("candidates"))
            out.push_back({c.at("label").get<std::string>(), c.at("conf").get<double>()});
        if (out.empty()) throw ProtocolError("classifier returned no candidates");
        return out;
    }

    size_t dimension() const override { return dim_; }

    std::vector<double> embed(const Raster& word_crop) override {
        nlohmann::json resp = request("embed", word_crop, "");
        auto v = resp.at("vector").get<std::vector<double>>();
        if (v.size() != dim_) throw ProtocolError("embedding dimension mismatch");
        return v;
    }

private:
    static double checked_conf(const nlohmann::json& d) {
        double c = d.at("conf").get<double>();
        if (!(c >= 0.0 && c <= 1.0)) throw ProtocolError("confidence out of [0,1]");
        return c;
    }

    nlohmann::json request(const std::string& op, const Raster& image,
                           const std::string& context) {
        int id = next_id_++;
        std::string image_path = scratch_dir_ + "/scriptorium_req_" +
                                 std::to_string(getpid()) + "_" + std::to_string(id) + ".png";
        save_png(image, image_path);
        nlohmann::json req = {
            {"id", id}, {"op", op}, {"image_path", image_path}, {"context", context}};
        std::string line = req.dump() + "\n";
        if (!write_all(line)) {
            unlink(image_path.c_str());
            throw BackendExited("backend process closed stdin");
        }
        std::string resp_line;
        bool ok = read_line(resp_line);
        unlink(image_path.c_str());
        if (!ok) throw BackendExited("backend process closed stdout");
        nlohmann::json resp;
        try {
            resp = nlohmann::json::parse(resp_line);
        } catch (const nlohmann::json::exception& e) {
            throw ProtocolError(std::string("malformed response: ") + e.what());
        }
        if (!resp.contains("id") || resp["id"].get<int>() != id)
            throw ProtocolError("response id mismatch");
        if (resp.contains("error"))
            throw ProtocolError("backend error: " + resp["error"].get<std::string>());
        return resp;
    }

    bool write_all(const std::string& data) {
        size_t off = 0;
        while (off < data.size()) {
            ssize_t n = ::write(stdin_fd_, data.data() + off, data.size() - off);
            if (n <= 0) {
                if (errno == EINTR) continue;
                return false;
            }
            off += static_cast<size_t>(n);
        }
        return true;
    }

    bool read_line(std::string& out) {
        for (;;) {
            size_t nl = buffer_.find('\n');
            if (nl != std::string::npos) {
                out = buffer_.substr(0, nl);
                buffer_.erase(0, nl + 1);
                return true;
            }
            pollfd pfd{stdout_fd_, POLLIN, 0};
            int pr = ::poll(&pfd, 1, timeout_ms_);
            if (pr == 0) {
                shutdown();
                throw BackendTimeout("backend did not answer within " +
                                     std::to_string(timeout_ms_) + " ms");
            }
            if (pr < 0) {
                if (errno == EINTR) continue;
                return false;
            }
            char chunk[4096];
            ssize_t n = ::read(stdout_fd_, chunk, sizeof(chunk));
            if (n <= 0) return false;
            buffer_.append(chunk, static_cast<size_t>(n));
        }
    }

    void shutdown() {
        if (pid_ > 0) {
            close(stdin_fd_);
            close(stdout_fd_);
            kill(pid_, SIGTERM);
            int status = 0;
            waitpid(pid_, &status, 0);
            pid_ = -1;
        }
    }

    size_t dim_;
    int timeout_ms_;
    std::string scratch_dir_;
    pid_t pid_ = -1;
    int stdin_fd_ = -1;
    int stdout_fd_ = -1;
    int next_id_ = 0;
    std::string buffer_;
};

}  // namespace scriptorium
