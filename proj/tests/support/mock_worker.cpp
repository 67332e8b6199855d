// Test worker for the evaluator protocol.
//
//   mock_worker --table FILE        serve rewards from a tabular file
//   mock_worker --replay FILE       play back a recorded trace; any request that
//                                   differs from the recording exits 1
//   misbehaviour switches (combine with --table):
//     --garbage        answer the handshake with a non-JSON line
//     --silent         never answer
//     --bad-reward     every reward is 1.5
//     --wrong-id       evaluate replies carry id + 1
//     --wrong-ack-id   train replies carry id + 1
//     --version N      advertise protocol version N
//     --die-after N    exit after N evaluate requests

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <thread>

#include <json.hpp>

#include "cmabnas/eval_bridge.hpp"
#include "cmabnas/genotype.hpp"
#include "cmabnas/oracles.hpp"

using Json = nlohmann::ordered_json;

namespace {

struct Options
{
    std::string table;
    std::string replay;
    bool garbage = false;
    bool silent = false;
    bool bad_reward = false;
    bool wrong_id = false;
    bool wrong_ack_id = false;
    int version = cmabnas::bridge::protocol_version;
    long die_after = -1;
};

void say(const Json& j)
{
    std::cout << j.dump() << '\n' << std::flush;
}

int replay(const std::string& path)
{
    std::ifstream in(path);
    std::stringstream text;
    text << in.rdbuf();
    const auto trace = cmabnas::bridge::parse_trace(text.str());
    std::size_t i = 0;
    std::string line;
    while (i < trace.size()) {
        if (trace[i].direction != cmabnas::bridge::TraceLine::Direction::request) {
            std::cout << trace[i++].text << '\n' << std::flush;
            continue;
        }
        if (!std::getline(std::cin, line)) {
            return 0;
        }
        if (line != trace[i].text) {
            std::cerr << "mock_worker: request " << i << " differs from the recording\n  got:  " << line
                      << "\n  want: " << trace[i].text << '\n';
            return 1;
        }
        ++i;
    }
    return 0;
}

} // namespace

int main(int argc, char** argv)
{
    Options opt;
    for (int i = 1; i < argc; ++i) {
        const std::string a = argv[i];
        auto next = [&]() -> std::string {
            if (i + 1 >= argc) {
                std::cerr << "mock_worker: " << a << " needs a value\n";
                std::exit(2);
            }
            return argv[++i];
        };
        if (a == "--table") {
            opt.table = next();
        } else if (a == "--replay") {
            opt.replay = next();
        } else if (a == "--garbage") {
            opt.garbage = true;
        } else if (a == "--silent") {
            opt.silent = true;
        } else if (a == "--bad-reward") {
            opt.bad_reward = true;
        } else if (a == "--wrong-id") {
            opt.wrong_id = true;
        } else if (a == "--wrong-ack-id") {
            opt.wrong_ack_id = true;
        } else if (a == "--version") {
            opt.version = std::stoi(next());
        } else if (a == "--die-after") {
            opt.die_after = std::stol(next());
        } else {
            std::cerr << "mock_worker: unknown argument " << a << '\n';
            return 2;
        }
    }
    if (!opt.replay.empty()) {
        return replay(opt.replay);
    }

    std::optional<cmabnas::TabularOracle> table;
    long evaluations = 0;
    std::string line;
    while (std::getline(std::cin, line)) {
        if (opt.silent) {
            continue;
        }
        Json msg;
        try {
            msg = Json::parse(line);
        } catch (const Json::exception&) {
            say({{"id", 0}, {"kind", "error"}, {"message", "malformed message"}});
            continue;
        }
        const auto id = msg.value("id", std::uint64_t{0});
        const auto kind = msg.value("kind", std::string{});
        try {
            if (kind == "handshake") {
                if (opt.garbage) {
                    std::cout << "hello, I am not a worker\n" << std::flush;
                    continue;
                }
                std::vector<std::string> ops = msg.at("space").at("operations");
                cmabnas::SearchSpaceConfig space(msg.at("space").at("nodes").get<std::size_t>(),
                                                 cmabnas::OperationSet(std::move(ops)));
                if (!opt.table.empty()) {
                    table.emplace(cmabnas::load_tabular(space, opt.table));
                }
                say({{"id", id}, {"kind", "ready"}, {"version", opt.version}});
            } else if (kind == "evaluate") {
                if (opt.die_after >= 0 && evaluations >= opt.die_after) {
                    return 1;
                }
                ++evaluations;
                double reward = 0.5;
                if (table) {
                    reward = table->lookup(cmabnas::parse_hash(msg.at("hash").get<std::string>()));
                }
                if (opt.bad_reward) {
                    reward = 1.5;
                }
                say({{"id", opt.wrong_id ? id + 1 : id}, {"kind", "reward"}, {"reward", reward}});
            } else if (kind == "train") {
                say({{"id", opt.wrong_ack_id ? id + 1 : id}, {"kind", "ack"}});
            } else if (kind == "train_step") {
                say({{"id", id}, {"kind", "ack"}});
            } else if (kind == "shutdown") {
                say({{"id", id}, {"kind", "ack"}});
                return 0;
            } else {
                say({{"id", id}, {"kind", "error"}, {"message", "unknown kind '" + kind + "'"}});
            }
        } catch (const std::exception& e) {
            say({{"id", id}, {"kind", "error"}, {"message", e.what()}});
        }
    }
    return 0;
}
