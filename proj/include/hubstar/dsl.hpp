#pragma once

#include <map>
#include <string>
#include <string_view>

#include "hubstar/errors.hpp"
#include "hubstar/model.hpp"

namespace hubstar {

struct SourceSpan {
    SourceLocation begin;
    SourceLocation end;
};

/// A parsed `.hsm` model together with where each element was declared.
/// Span keys are element paths such as `hub:customer` or `hub:customer/mapping:customers`.
struct ModelDocument {
    std::string raw_text;
    ModelSpec spec;
    std::map<std::string, SourceSpan> source_spans;
};

/// Parses model text. Throws ParseError carrying the location of the first error.
ModelDocument parse_model(std::string_view text);

/// Canonical rendering: declaration order, two-space indentation, one statement per line.
std::string render_model(const ModelSpec& spec);

std::string render_expr(const Expr& expr);

}  // namespace hubstar
