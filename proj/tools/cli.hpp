#ifndef PULSEKIT_TOOLS_CLI_HPP
#define PULSEKIT_TOOLS_CLI_HPP

#include <iosfwd>
#include <string>

#include <json.hpp>

#include "pulsekit/core_model.hpp"

namespace pulsekit::cli {

using Json = nlohmann::ordered_json;

/// Exit codes of the command-line front end.
enum Exit : int { ok = 0, usage = 1, solver = 2, tolerance = 3 };

/// Malformed config text; carries the 1-based line and column.
class ParseError : public std::runtime_error {
public:
    ParseError(const std::string& what, int line, int column)
        : std::runtime_error(what), line_(line), column_(column)
    {
    }
    int line() const { return line_; }
    int column() const { return column_; }

private:
    int line_, column_;
};

ReactionSystem system_from_json(const nlohmann::json& j);
Json system_to_json(const ReactionSystem& sys);
ReactionSystem parse_config(const std::string& text);
ReactionSystem load_config(const std::string& path);

/// JSON text with doubles printed as %.17g and insertion order kept.
std::string dump(const Json& j, int indent = 2);

/// Two-component example with a cubic correction nu U1^3 in G1.
ReactionSystem cubic_example(Real mu, Real nu, Real epsilon = 0.1);

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

} // namespace pulsekit::cli

#endif
