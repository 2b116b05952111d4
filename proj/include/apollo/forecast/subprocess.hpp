#pragma once

#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "apollo/forecast/predictor.hpp"

namespace apollo::forecast {

// Line protocol for out-of-process predictors.
//
// The host writes two lines to the child's standard input and closes it:
//
//   apollo-forecast/1 horizon=<H> samples=<S> seed=<N> quant=<Q>
//   <t_1>,<t_2>,...,<t_n>            context tokens
//
// The child answers on standard output with H lines, one per frame, each
// holding S comma-separated token IDs in [0, Q], flushed after every frame.
// Anything else on stdout is a protocol error; stderr is passed through.

inline constexpr std::string_view kProtocolTag = "apollo-forecast/1";

std::string format_frame_line(std::span<const Token> frame);

/// Parses one frame line; throws InputError on a malformed line, a wrong
/// token count or a token above quant_factor.
std::vector<Token> parse_frame_line(std::string_view line, std::size_t num_samples,
                                    std::uint32_t quant_factor);

void write_request(std::ostream& out, const ForecastRequest& req);
ForecastRequest read_request(std::istream& in);

/// Child side: reads a request from `in`, streams frames from `handle` to
/// `out` in the line format, flushing per frame.
void serve_request(const PredictorHandle& handle, std::istream& in, std::ostream& out);

/// A predictor backed by `/bin/sh -c <command>` speaking the protocol above.
/// Each start() spawns a fresh child; the child is terminated when its
/// generator is destroyed.
PredictorHandle make_subprocess_predictor(std::string command, Role role = Role::main);

}  // namespace apollo::forecast
