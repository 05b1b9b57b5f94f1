#include "padsteg/cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <iterator>
#include <sstream>

#include "padsteg/analyzer.hpp"
#include "padsteg/error.hpp"
#include "padsteg/scenario.hpp"
#include "padsteg/stegcodec.hpp"
#include "padsteg/trace.hpp"

namespace padsteg {

namespace {

std::string to_hex(ByteView bytes) {
  static constexpr char kDigits[] = "0123456789abcdef";
  std::string out;
  out.reserve(bytes.size() * 2);
  for (auto b : bytes) {
    out.push_back(kDigits[b >> 4]);
    out.push_back(kDigits[b & 0x0F]);
  }
  return out;
}

Bytes from_hex(std::string_view text) {
  Bytes out;
  int hi = -1;
  for (char c : text) {
    if (c == ' ' || c == '\n' || c == '\t' || c == '\r') continue;
    int v = (c >= '0' && c <= '9') ? c - '0'
            : (c >= 'a' && c <= 'f') ? c - 'a' + 10
            : (c >= 'A' && c <= 'F') ? c - 'A' + 10
                                     : -1;
    if (v < 0) throw Error(ErrorCode::Malformed, std::string("not a hex digit: '") + c + "'");
    if (hi < 0) {
      hi = v;
    } else {
      out.push_back(static_cast<std::uint8_t>((hi << 4) | v));
      hi = -1;
    }
  }
  if (hi >= 0) throw Error(ErrorCode::Malformed, "odd number of hex digits");
  return out;
}

Bytes read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, "cannot open " + path);
  return Bytes{std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

struct Options {
  std::string config;
  std::string out_path;
  std::uint64_t seed = 0;
  bool warden = false;
  std::string trace;
  bool json = false;
  std::string warden_in;
  std::string warden_out;
  std::string mac;
  std::string nonce;
  std::string chunk_file;
  std::uint64_t chunk_seed = 1;
  std::string hexstream;
  double frames_per_day = 0;
  std::uint32_t bits = kTcpAckPaddingBits;
  double hosts = 1;
};

int cmd_simulate(const Options& o, CLI::App& sub, std::ostream& out) {
  std::optional<std::uint64_t> seed;
  if (sub.count("--seed")) seed = o.seed;
  ScenarioConfig cfg = load_scenario(o.config, seed);
  if (o.warden) cfg.warden = true;
  const SimulationResult result = run_scenario(cfg);
  write_trace(result.trace, o.out_path);

  std::size_t hidden = 0;
  for (const auto& h : cfg.hosts) hidden += h.kind == HostKind::Hidden;
  std::size_t messages = 0;
  for (const auto& e : result.events) messages += std::holds_alternative<MessageReceived>(e.event);
  out << "hosts: " << cfg.hosts.size() << " (" << hidden << " hidden)\n"
      << "frames: " << result.trace.records.size() << "\n"
      << "messages delivered: " << messages << "\n"
      << "incomplete streams: " << result.incomplete_streams.size() << "\n"
      << "warden: " << (cfg.warden ? "on" : "off") << "\n";
  return 0;
}

int cmd_analyze(const Options& o, std::ostream& out) {
  const TrafficReport report = compute_report(read_trace(o.trace));
  out << (o.json ? report.to_json() + "\n" : report.to_table());
  return 0;
}

int cmd_detect(const Options& o, std::ostream& out) {
  char line[96];
  for (const auto& node : detect_hidden_nodes(read_trace(o.trace))) {
    std::snprintf(line, sizeof line, "%s first_seen=%.6f adverts=%llu\n", node.mac.to_string().c_str(),
                  node.first_seen, static_cast<unsigned long long>(node.advert_count));
    out << line;
  }
  return 0;
}

int cmd_warden(const Options& o, std::ostream& out) {
  const Trace in = read_trace(o.warden_in);
  const Trace cleaned = active_warden(in);
  std::size_t changed = 0;
  for (std::size_t i = 0; i < in.records.size(); ++i) changed += in.records[i].data != cleaned.records[i].data;
  write_trace(cleaned, o.warden_out);
  out << "frames: " << in.records.size() << ", padding zeroed: " << changed << "\n";
  return 0;
}

int cmd_encode(const Options& o, std::ostream& out) {
  std::string text = o.nonce;
  if (text.starts_with("0x") || text.starts_with("0X")) text = text.substr(2);
  const Bytes raw = from_hex(std::string(text.size() % 2, '0') + text);
  if (raw.empty() || raw.size() > 2) throw Error(ErrorCode::Malformed, "nonce must be 1 to 4 hex digits");
  std::uint16_t nonce = 0;
  for (auto b : raw) nonce = static_cast<std::uint16_t>((nonce << 8) | b);
  out << to_hex(encode_advertisement(MacAddress::parse(o.mac), nonce)) << "\n";
  return 0;
}

int cmd_chunk(const Options& o, std::ostream& out) {
  Rng rng(o.chunk_seed);
  const auto chunks = chunk_message(read_file(o.chunk_file), rng);
  for (std::size_t i = 0; i < chunks.size(); ++i) out << (i ? " " : "") << to_hex(chunks[i]);
  out << "\n";
  return 0;
}

int cmd_unchunk(const Options& o, std::ostream& out) {
  std::string text = o.hexstream;
  if (text == "-") text.assign(std::istreambuf_iterator<char>(std::cin), std::istreambuf_iterator<char>());
  const Bytes stream = from_hex(text);
  if (stream.size() % kChunkLen != 0) {
    throw Error(ErrorCode::BadLength, "hex stream is not a whole number of 6-byte chunks");
  }
  Reassembler reassembler;
  for (std::size_t at = 0; at < stream.size(); at += kChunkLen) {
    StegChunk chunk{};
    std::copy_n(stream.begin() + static_cast<std::ptrdiff_t>(at), kChunkLen, chunk.begin());
    if (auto message = reassembler.push(chunk)) {
      out.write(reinterpret_cast<const char*>(message->data()), static_cast<std::streamsize>(message->size()));
    }
  }
  reassembler.finish();
  return 0;
}

int cmd_bandwidth(const Options& o, std::ostream& out) {
  if (o.frames_per_day < 0) throw Error(ErrorCode::InvalidConfig, "--frames-per-day must be non-negative");
  const auto e = estimate_bandwidth_shared(o.frames_per_day, o.hosts, o.bits);
  char line[64];
  std::snprintf(line, sizeof line, "%.3f bit/s\n", e.bits_per_second);
  out << line;
  return 0;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Padding steganography toolkit: simulate, analyze and neutralize covert channels in "
               "Ethernet frame padding",
               "padsteg"};
  app.require_subcommand(1);
  Options o;

  auto* simulate = app.add_subcommand("simulate", "Run a LAN scenario and write the capture");
  simulate->add_option("--config", o.config, "Scenario JSON file")->required()->check(CLI::ExistingFile);
  simulate->add_option("--out", o.out_path, "Output capture file")->required();
  simulate->add_option("--seed", o.seed, "Override the scenario seed");
  simulate->add_flag("--warden", o.warden, "Zero improper padding on every delivered frame");

  auto* analyze = app.add_subcommand("analyze", "Padding statistics of a capture");
  analyze->add_option("trace", o.trace, "Capture file")->required();
  analyze->add_flag("--json", o.json, "Machine-readable report");

  auto* detect = app.add_subcommand("detect", "List hosts sending valid advertisements");
  detect->add_option("trace", o.trace, "Capture file")->required();

  auto* warden = app.add_subcommand("warden", "Copy a capture with all padding zeroed");
  warden->add_option("in", o.warden_in, "Input capture")->required();
  warden->add_option("out", o.warden_out, "Output capture")->required();

  auto* encode = app.add_subcommand("encode", "Print the 18-byte advertisement for a MAC and nonce");
  encode->add_option("--mac", o.mac, "Source MAC, e.g. AA:BB:CC:DD:EE:FF")->required();
  encode->add_option("--nonce", o.nonce, "Nonzero 16-bit nonce in hex")->required();

  auto* chunk = app.add_subcommand("chunk", "Split a file into 6-byte padding chunks (hex)");
  chunk->add_option("file", o.chunk_file, "Message file")->required();
  chunk->add_option("--seed", o.chunk_seed, "Seed for the tail fill");

  auto* unchunk = app.add_subcommand("unchunk", "Reassemble hex chunks into the message");
  unchunk->add_option("hexstream", o.hexstream, "Hex chunks, or - for standard input")->required();

  auto* bandwidth = app.add_subcommand("bandwidth", "Covert bandwidth from a daily frame count");
  bandwidth->add_option("--frames-per-day", o.frames_per_day, "Improper frames per day")->required();
  bandwidth->add_option("--bits", o.bits, "Padding bits per frame")->capture_default_str();
  bandwidth->add_option("--hosts", o.hosts, "Hosts sharing the daily count")->capture_default_str();

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n\n";
    const auto subs = app.get_subcommands();
    err << (subs.empty() ? app.help() : subs.front()->help());
    return 2;
  }

  try {
    if (simulate->parsed()) return cmd_simulate(o, *simulate, out);
    if (analyze->parsed()) return cmd_analyze(o, out);
    if (detect->parsed()) return cmd_detect(o, out);
    if (warden->parsed()) return cmd_warden(o, out);
    if (encode->parsed()) return cmd_encode(o, out);
    if (chunk->parsed()) return cmd_chunk(o, out);
    if (unchunk->parsed()) return cmd_unchunk(o, out);
    if (bandwidth->parsed()) return cmd_bandwidth(o, out);
  } catch (const std::exception& e) {
    err << "padsteg: " << e.what() << "\n";
    return 1;
  }
  err << app.help();
  return 2;
}

}  // namespace padsteg
