#include "toolplan/io.hpp"

#include <fstream>
#include <sstream>

#include "toolplan/error.hpp"

namespace toolplan {

std::string read_text_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw Error(ErrorKind::FileNotFound, "cannot open " + path.string(), std::nullopt,
                    path.string());
    }
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

void write_text_file(const std::filesystem::path& path, std::string_view content) {
    if (path.has_parent_path()) {
        std::filesystem::create_directories(path.parent_path());
    }
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw Error(ErrorKind::InvalidInput, "cannot write " + path.string(), std::nullopt,
                    path.string());
    }
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
}

std::vector<Json> read_jsonl(const std::filesystem::path& path) {
    std::istringstream in(read_text_file(path));
    std::vector<Json> records;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        try {
            records.push_back(Json::parse(line));
        } catch (const Json::parse_error& e) {
            throw Error(ErrorKind::InvalidInput,
                        path.string() + ":" + std::to_string(line_no) + ": " + e.what(),
                        std::nullopt, path.string());
        }
    }
    return records;
}

std::string to_jsonl(const std::vector<Json>& records) {
    std::string out;
    for (const auto& r : records) {
        out += dump_compact(r);
        out += '\n';
    }
    return out;
}

std::string dump_compact(const Json& value) {
    return value.dump(-1, ' ', false, Json::error_handler_t::replace);
}

std::string dump_pretty(const Json& value) {
    return value.dump(2, ' ', false, Json::error_handler_t::replace) + "\n";
}

}  // namespace toolplan
