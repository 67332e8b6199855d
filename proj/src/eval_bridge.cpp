#include "cmabnas/eval_bridge.hpp"

#include <algorithm>
#include <cerrno>
#include <csignal>
#include <cstring>

#include <fcntl.h>
#include <poll.h>
#include <sys/wait.h>
#include <unistd.h>

#include <json.hpp>

#include "cmabnas/genotype.hpp"

namespace cmabnas::bridge {

using Json = nlohmann::ordered_json;

namespace {

std::string errno_text(const char* what)
{
    return std::string(what) + ": " + std::strerror(errno);
}

void ignore_sigpipe_once()
{
    static const bool done = [] {
        std::signal(SIGPIPE, SIG_IGN);
        return true;
    }();
    (void)done;
}

Json genotype_entry(const SearchSpaceConfig& config, const ArchitecturePair& pair)
{
    const std::string text = serialize_genotype(config, pair);
    return Json{{"hash", format_hash(fnv1a64(text))}, {"genotype", text}};
}

} // namespace

std::vector<TraceLine> parse_trace(std::string_view text)
{
    std::vector<TraceLine> out;
    std::size_t start = 0;
    std::size_t line_no = 0;
    while (start < text.size()) {
        auto end = text.find('\n', start);
        if (end == std::string_view::npos) {
            end = text.size();
        }
        std::string_view line = text.substr(start, end - start);
        start = end + 1;
        ++line_no;
        if (line.empty() || line.front() == '#') {
            continue;
        }
        if (line.size() < 2 || line[1] != ' ' || (line[0] != '>' && line[0] != '<')) {
            throw std::invalid_argument("trace line " + std::to_string(line_no) + ": expected '> ' or '< ' prefix");
        }
        out.push_back({line[0] == '>' ? TraceLine::Direction::request : TraceLine::Direction::response,
                       std::string(line.substr(2))});
    }
    return out;
}

std::string format_trace(std::span<const TraceLine> trace)
{
    std::string out;
    for (const auto& t : trace) {
        out += t.direction == TraceLine::Direction::request ? "> " : "< ";
        out += t.text;
        out += '\n';
    }
    return out;
}

struct WorkerHandle::Process
{
    pid_t pid = -1;
    int to_child = -1;
    int from_child = -1;
    std::string buffer;

    ~Process()
    {
        if (to_child >= 0) {
            ::close(to_child);
        }
        if (from_child >= 0) {
            ::close(from_child);
        }
    }

    void write_line(const std::string& line)
    {
        std::string data = line + '\n';
        const char* p = data.data();
        std::size_t left = data.size();
        while (left > 0) {
            const ssize_t n = ::write(to_child, p, left);
            if (n < 0) {
                if (errno == EINTR) {
                    continue;
                }
                throw ProtocolError(errno_text("write to worker failed"));
            }
            p += n;
            left -= static_cast<std::size_t>(n);
        }
    }

    std::string read_line(std::chrono::milliseconds timeout)
    {
        const auto deadline = std::chrono::steady_clock::now() + timeout;
        while (true) {
            if (auto nl = buffer.find('\n'); nl != std::string::npos) {
                std::string line = buffer.substr(0, nl);
                buffer.erase(0, nl + 1);
                if (!line.empty() && line.back() == '\r') {
                    line.pop_back();
                }
                return line;
            }
            const auto left = std::chrono::duration_cast<std::chrono::milliseconds>(
                deadline - std::chrono::steady_clock::now());
            if (left.count() <= 0) {
                throw TimeoutError("worker did not answer within " + std::to_string(timeout.count()) + " ms");
            }
            pollfd pfd{from_child, POLLIN, 0};
            const int ready = ::poll(&pfd, 1, static_cast<int>(left.count()));
            if (ready < 0) {
                if (errno == EINTR) {
                    continue;
                }
                throw ProtocolError(errno_text("poll on worker failed"));
            }
            if (ready == 0) {
                continue;
            }
            char chunk[4096];
            const ssize_t n = ::read(from_child, chunk, sizeof chunk);
            if (n < 0) {
                if (errno == EINTR) {
                    continue;
                }
                throw ProtocolError(errno_text("read from worker failed"));
            }
            if (n == 0) {
                throw ProtocolError("worker closed its output stream");
            }
            buffer.append(chunk, static_cast<std::size_t>(n));
        }
    }

    /// Waits up to `grace` for exit, then kills. Returns the exit status or -1.
    int reap(std::chrono::milliseconds grace) noexcept
    {
        if (pid <= 0) {
            return -1;
        }
        if (to_child >= 0) {
            ::close(to_child);
            to_child = -1;
        }
        const auto deadline = std::chrono::steady_clock::now() + grace;
        int status = 0;
        while (true) {
            const pid_t r = ::waitpid(pid, &status, WNOHANG);
            if (r == pid) {
                pid = -1;
                return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
            }
            if (r < 0 && errno != EINTR) {
                pid = -1;
                return -1;
            }
            if (std::chrono::steady_clock::now() >= deadline) {
                break;
            }
            ::usleep(1000);
        }
        ::kill(pid, SIGKILL);
        while (::waitpid(pid, &status, 0) < 0 && errno == EINTR) {
        }
        pid = -1;
        return -1;
    }
};

WorkerHandle WorkerHandle::spawn(const std::vector<std::string>& argv, const SearchSpaceConfig& config,
                                 std::chrono::milliseconds timeout)
{
    if (argv.empty()) {
        throw SpawnError("empty worker command");
    }
    config.validate();
    ignore_sigpipe_once();

    int in_pipe[2];
    int out_pipe[2];
    int err_pipe[2];
    if (::pipe2(in_pipe, O_CLOEXEC) != 0) {
        throw SpawnError(errno_text("pipe"));
    }
    if (::pipe2(out_pipe, O_CLOEXEC) != 0) {
        ::close(in_pipe[0]);
        ::close(in_pipe[1]);
        throw SpawnError(errno_text("pipe"));
    }
    if (::pipe2(err_pipe, O_CLOEXEC) != 0) {
        for (int fd : {in_pipe[0], in_pipe[1], out_pipe[0], out_pipe[1]}) {
            ::close(fd);
        }
        throw SpawnError(errno_text("pipe"));
    }

    std::vector<char*> cargv;
    for (const auto& a : argv) {
        cargv.push_back(const_cast<char*>(a.c_str()));
    }
    cargv.push_back(nullptr);

    const pid_t pid = ::fork();
    if (pid < 0) {
        for (int fd : {in_pipe[0], in_pipe[1], out_pipe[0], out_pipe[1], err_pipe[0], err_pipe[1]}) {
            ::close(fd);
        }
        throw SpawnError(errno_text("fork"));
    }
    if (pid == 0) {
        ::dup2(in_pipe[0], STDIN_FILENO);
        ::dup2(out_pipe[1], STDOUT_FILENO);
        ::execvp(cargv[0], cargv.data());
        const int err = errno;
        [[maybe_unused]] auto w = ::write(err_pipe[1], &err, sizeof err);
        ::_exit(127);
    }

    ::close(in_pipe[0]);
    ::close(out_pipe[1]);
    ::close(err_pipe[1]);
    auto process = std::make_unique<Process>();
    process->pid = pid;
    process->to_child = in_pipe[1];
    process->from_child = out_pipe[0];

    int exec_errno = 0;
    ssize_t n = 0;
    while ((n = ::read(err_pipe[0], &exec_errno, sizeof exec_errno)) < 0 && errno == EINTR) {
    }
    ::close(err_pipe[0]);
    if (n == static_cast<ssize_t>(sizeof exec_errno)) {
        process->reap(std::chrono::milliseconds(0));
        throw SpawnError("cannot execute '" + argv[0] + "': " + std::strerror(exec_errno));
    }

    WorkerHandle handle(std::move(process), config, timeout);
    const std::uint64_t id = handle.next_id_++;
    Json request{{"id", id},
                 {"kind", "handshake"},
                 {"version", protocol_version},
                 {"space", {{"nodes", config.nodes}, {"operations", config.operations.names()}}}};
    const std::string reply = handle.exchange("handshake", request.dump(), "ready", id);
    const Json parsed = Json::parse(reply);
    if (!parsed.contains("version") || !parsed["version"].is_number_integer() ||
        parsed["version"].get<int>() != protocol_version) {
        handle.close(false);
        throw ProtocolError("protocol version mismatch in '" + reply + "'");
    }
    handle.state_ = WorkerState::ready;
    return handle;
}

WorkerHandle::WorkerHandle(std::unique_ptr<Process> process, SearchSpaceConfig config,
                           std::chrono::milliseconds timeout)
  : process_(std::move(process))
  , config_(std::move(config))
  , timeout_(timeout)
{}

WorkerHandle::WorkerHandle(WorkerHandle&& other) noexcept
  : process_(std::move(other.process_))
  , config_(std::move(other.config_))
  , timeout_(other.timeout_)
  , state_(other.state_)
  , next_id_(other.next_id_)
  , exit_status_(other.exit_status_)
  , transcript_(std::move(other.transcript_))
{
    other.state_ = WorkerState::closed;
}

WorkerHandle& WorkerHandle::operator=(WorkerHandle&& other) noexcept
{
    if (this != &other) {
        close(state_ == WorkerState::ready);
        process_ = std::move(other.process_);
        config_ = std::move(other.config_);
        timeout_ = other.timeout_;
        state_ = other.state_;
        next_id_ = other.next_id_;
        exit_status_ = other.exit_status_;
        transcript_ = std::move(other.transcript_);
        other.state_ = WorkerState::closed;
    }
    return *this;
}

WorkerHandle::~WorkerHandle()
{
    close(state_ == WorkerState::ready);
}

void WorkerHandle::close(bool graceful) noexcept
{
    if (!process_) {
        state_ = WorkerState::closed;
        return;
    }
    if (graceful) {
        try {
            shutdown();
            return;
        } catch (...) {
        }
    }
    exit_status_ = process_->reap(std::chrono::milliseconds(0));
    process_.reset();
    state_ = WorkerState::closed;
}

std::string WorkerHandle::exchange(const std::string& kind, std::string request_line,
                                   const std::string& expected_kind, std::uint64_t id)
{
    if (!process_ || state_ == WorkerState::closed) {
        throw ProtocolError(kind + " on a closed worker");
    }
    if (state_ == WorkerState::busy) {
        throw ProtocolError(kind + " while another request is in flight");
    }
    const WorkerState resume = state_;
    state_ = WorkerState::busy;
    std::string reply;
    try {
        transcript_.push_back({TraceLine::Direction::request, request_line});
        process_->write_line(request_line);
        reply = process_->read_line(timeout_);
        transcript_.push_back({TraceLine::Direction::response, reply});

        Json parsed;
        try {
            parsed = Json::parse(reply);
        } catch (const Json::exception&) {
            throw ProtocolError("malformed response to " + kind + ": '" + reply + "'");
        }
        if (!parsed.is_object() || !parsed.contains("id") || !parsed["id"].is_number_unsigned() ||
            !parsed.contains("kind") || !parsed["kind"].is_string()) {
            throw ProtocolError("response to " + kind + " lacks id/kind: '" + reply + "'");
        }
        if (parsed["id"].get<std::uint64_t>() != id) {
            throw ProtocolError("response id " + std::to_string(parsed["id"].get<std::uint64_t>()) +
                                " does not match request id " + std::to_string(id) + ": '" + reply + "'");
        }
        const auto got = parsed["kind"].get<std::string>();
        if (got == "error" && resume == WorkerState::ready) {
            state_ = resume;
            const auto msg = parsed.contains("message") && parsed["message"].is_string()
                                 ? parsed["message"].get<std::string>()
                                 : std::string("(no message)");
            throw WorkerReportedError("worker failed " + kind + ": " + msg);
        }
        if (got != expected_kind) {
            throw ProtocolError("expected '" + expected_kind + "' response to " + kind + ", got '" + reply + "'");
        }
    } catch (const WorkerReportedError&) {
        throw;
    } catch (...) {
        close(false);
        throw;
    }
    state_ = resume;
    return reply;
}

double WorkerHandle::request_evaluate(const ArchitecturePair& pair)
{
    const std::uint64_t id = next_id_++;
    Json request{{"id", id}, {"kind", "evaluate"}};
    request.update(genotype_entry(config_, pair));
    const Json reply = Json::parse(exchange("evaluate", request.dump(), "reward", id));
    if (!reply.contains("reward") || !reply["reward"].is_number()) {
        close(false);
        throw ProtocolError("reward response without a numeric reward: '" + reply.dump() + "'");
    }
    const double r = reply["reward"].get<double>();
    if (!(r >= 0.0 && r <= 1.0)) {
        close(false);
        throw ProtocolError("worker returned reward " + reply["reward"].dump() + " outside [0, 1]");
    }
    return r;
}

void WorkerHandle::request_train(std::span<const ArchitecturePair> batch)
{
    const std::uint64_t id = next_id_++;
    Json entries = Json::array();
    for (const auto& p : batch) {
        entries.push_back(genotype_entry(config_, p));
    }
    Json request{{"id", id}, {"kind", "train"}, {"genotypes", std::move(entries)}};
    exchange("train", request.dump(), "ack", id);
}

void WorkerHandle::request_train_step(const ArchitecturePair& pair)
{
    const std::uint64_t id = next_id_++;
    Json request{{"id", id}, {"kind", "train_step"}};
    request.update(genotype_entry(config_, pair));
    exchange("train_step", request.dump(), "ack", id);
}

void WorkerHandle::shutdown()
{
    if (!process_ || state_ == WorkerState::closed) {
        return;
    }
    const std::uint64_t id = next_id_++;
    Json request{{"id", id}, {"kind", "shutdown"}};
    exchange("shutdown", request.dump(), "ack", id);
    exit_status_ = process_->reap(std::chrono::milliseconds(2000));
    process_.reset();
    state_ = WorkerState::closed;
}

BridgeOracle::BridgeOracle(std::vector<WorkerHandle> workers)
  : workers_(std::move(workers))
  , busy_(workers_.size(), false)
{
    if (workers_.empty()) {
        throw std::invalid_argument("bridge oracle needs at least one worker");
    }
}

BridgeOracle::BridgeOracle(const std::vector<std::string>& argv, const SearchSpaceConfig& config,
                           std::size_t pool_size, std::chrono::milliseconds timeout)
{
    if (pool_size == 0) {
        throw std::invalid_argument("bridge oracle needs at least one worker");
    }
    for (std::size_t i = 0; i < pool_size; ++i) {
        workers_.push_back(WorkerHandle::spawn(argv, config, timeout));
    }
    busy_.assign(workers_.size(), false);
}

std::size_t BridgeOracle::acquire()
{
    std::unique_lock lock(mutex_);
    std::size_t found = workers_.size();
    idle_.wait(lock, [&] {
        for (std::size_t i = 0; i < busy_.size(); ++i) {
            if (!busy_[i]) {
                found = i;
                return true;
            }
        }
        return false;
    });
    busy_[found] = true;
    return found;
}

void BridgeOracle::broadcast(const std::function<void(WorkerHandle&)>& send)
{
    std::unique_lock lock(mutex_);
    idle_.wait(lock, [&] { return std::none_of(busy_.begin(), busy_.end(), [](bool b) { return b; }); });
    for (auto& w : workers_) {
        send(w);
    }
}

void BridgeOracle::release(std::size_t i)
{
    {
        std::lock_guard lock(mutex_);
        busy_[i] = false;
    }
    idle_.notify_all();
}

double BridgeOracle::evaluate(const ArchitecturePair& pair, std::uint64_t)
{
    const std::size_t i = acquire();
    try {
        const double r = workers_[i].request_evaluate(pair);
        release(i);
        return r;
    } catch (...) {
        release(i);
        throw;
    }
}

void BridgeOracle::train(std::span<const ArchitecturePair> batch)
{
    broadcast([&](WorkerHandle& w) { w.request_train(batch); });
}

void BridgeOracle::train_step(const ArchitecturePair& pair)
{
    broadcast([&](WorkerHandle& w) { w.request_train_step(pair); });
}

} // namespace cmabnas::bridge
