#include <CLI11.hpp>
#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>

#include "warc/commands.hpp"

namespace {

int fail(int code, const std::string& kind, const std::string& message) {
    nlohmann::json err{{"error", {{"code", code}, {"kind", kind}, {"message", message}}}};
    std::cerr << err.dump() << std::endl;
    return code;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"weyl-arc-sim: photonic Weyl lattice and emitter-dynamics toolkit"};
    std::string command, config_path, out_dir;
    int threads = 0;
    std::vector<std::string> overrides;

    std::string cmd_list;
    for (const auto& [name, fn] : warc::command_table()) {
        if (!cmd_list.empty()) cmd_list += ", ";
        cmd_list += name;
    }
    app.add_option("command", command, "one of: " + cmd_list)->required();
    app.add_option("--config", config_path, "configuration file (INI)")->required();
    app.add_option("--out", out_dir, "output directory (default out_<command>)");
    app.add_option("--threads", threads, "worker threads (default: all cores)");
    app.add_option("--override", overrides, "section.key=value applied over the config");
    CLI11_PARSE(app, argc, argv);

    std::string text;
    {
        std::ifstream in(config_path);
        if (!in) return fail(2, "config", "cannot open config file: " + config_path);
        text.assign((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    }

    std::vector<std::string> errors;
    warc::RawConfig raw = warc::parse_config_text(text, errors);
    for (const std::string& ov : overrides) {
        const size_t eq = ov.find('=');
        const size_t dot = ov.find('.');
        if (eq == std::string::npos || dot == std::string::npos || dot > eq) {
            errors.push_back("malformed override '" + ov + "' (want section.key=value)");
            continue;
        }
        raw.set(ov.substr(0, dot), ov.substr(dot + 1, eq - dot - 1), ov.substr(eq + 1));
    }
    if (!errors.empty()) {
        std::string msg;
        for (const auto& e : errors) msg += e + "; ";
        return fail(2, "config", msg);
    }

    if (out_dir.empty()) out_dir = "out_" + command;
    try {
        warc::run_command(command, raw, out_dir, threads);
    } catch (const warc::ConfigError& e) {
        return fail(2, "config", e.what());
    } catch (const warc::IoError& e) {
        return fail(4, "io", e.what());
    } catch (const std::filesystem::filesystem_error& e) {
        return fail(4, "io", e.what());
    } catch (const std::exception& e) {
        return fail(3, "numerical", e.what());
    }
    return 0;
}
