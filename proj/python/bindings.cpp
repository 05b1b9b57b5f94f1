#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <cmath>
#include <string>

#include "padsteg/analyzer.hpp"
#include "padsteg/error.hpp"
#include "padsteg/frame.hpp"
#include "padsteg/scenario.hpp"
#include "padsteg/simulator.hpp"
#include "padsteg/stegcodec.hpp"
#include "padsteg/trace.hpp"

namespace py = pybind11;
using namespace padsteg;

namespace {

Bytes to_bytes(const py::bytes& b) {
  const std::string s = b;
  return Bytes(s.begin(), s.end());
}

template <typename Container>
py::bytes as_py(const Container& c) {
  return py::bytes(reinterpret_cast<const char*>(c.data()), c.size());
}

PaddingFill fill_of(const std::optional<py::bytes>& padding) {
  if (!padding) return ZeroFill{};
  return GivenFill{to_bytes(*padding)};
}

py::dict frame_dict(const EthernetFrame& f) {
  py::dict d;
  d["dst"] = f.dst().to_string();
  d["src"] = f.src().to_string();
  d["ethertype"] = f.ethertype();
  d["payload"] = as_py(f.payload());
  d["padding"] = as_py(f.padding());
  d["padding_class"] = std::string(to_string(classify_padding(f)));
  return d;
}

StegChunk chunk_of(const py::bytes& b) {
  const Bytes raw = to_bytes(b);
  if (raw.size() != kChunkLen) throw Error(ErrorCode::BadLength, "chunk must be 6 bytes");
  StegChunk c{};
  std::copy(raw.begin(), raw.end(), c.begin());
  return c;
}

py::dict bandwidth_dict(const BandwidthEstimate& b) {
  py::dict d;
  d["bits_per_second"] = b.bits_per_second;
  d["frames_per_day"] = b.frames_per_day;
  d["padding_bits_per_frame"] = b.padding_bits_per_frame;
  return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Ethernet padding covert channel core";

  static py::exception<Error> error_type(m, "Error");
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const Error& e) {
      py::object exc = static_cast<py::object&>(error_type)(e.what());
      exc.attr("code") = std::string(to_string(e.code()));
      exc.attr("offset") = e.offset() ? py::cast(*e.offset()) : py::none();
      PyErr_SetObject(error_type.ptr(), exc.ptr());
    }
  });

  // frames
  m.def("padding_length_for", &padding_length_for, py::arg("payload_len"));
  m.def(
      "build_arp_request",
      [](const std::string& src_mac, const std::string& spa, const std::string& tpa,
         std::optional<py::bytes> padding) {
        const auto sha = MacAddress::parse(src_mac);
        const auto arp = build_arp_request(sha, Ipv4Address::parse(spa), Ipv4Address::parse(tpa));
        return as_py(serialize_frame(
            build_frame(MacAddress::broadcast(), sha, ethertype::kArp, arp.serialize(), fill_of(padding))));
      },
      py::arg("src_mac"), py::arg("spa"), py::arg("tpa"), py::arg("padding") = py::none());
  m.def(
      "build_tcp_ack",
      [](const std::string& src_mac, const std::string& dst_mac, const std::string& src_ip,
         const std::string& dst_ip, std::uint16_t sport, std::uint16_t dport, std::uint32_t seq,
         std::uint32_t ack, std::uint16_t window, std::optional<py::bytes> padding) {
        const TcpEndpoints conn{Ipv4Address::parse(src_ip), Ipv4Address::parse(dst_ip), sport, dport};
        return as_py(serialize_frame(build_frame(MacAddress::parse(dst_mac), MacAddress::parse(src_mac),
                                                 ethertype::kIpv4,
                                                 build_tcp_ack(conn, seq, ack, window).serialize(),
                                                 fill_of(padding))));
      },
      py::arg("src_mac"), py::arg("dst_mac"), py::arg("src_ip"), py::arg("dst_ip"), py::arg("sport"),
      py::arg("dport"), py::arg("seq") = 0, py::arg("ack") = 0, py::arg("window") = 65535,
      py::arg("padding") = py::none());
  m.def(
      "parse_frame", [](const py::bytes& wire) { return frame_dict(parse_frame(to_bytes(wire))); },
      py::arg("wire"));
  m.def(
      "classify_padding",
      [](const py::bytes& wire) { return std::string(to_string(classify_padding(parse_frame(to_bytes(wire))))); },
      py::arg("wire"));

  // codec
  m.def(
      "encode_advertisement",
      [](const std::string& mac, std::uint16_t nonce) {
        return as_py(encode_advertisement(MacAddress::parse(mac), nonce));
      },
      py::arg("mac"), py::arg("nonce"));
  m.def(
      "verify_advertisement",
      [](const py::bytes& padding, const std::string& mac) {
        return verify_advertisement(to_bytes(padding), MacAddress::parse(mac));
      },
      py::arg("padding"), py::arg("mac"));
  m.def("chunk_count_for", &chunk_count_for, py::arg("payload_len"));
  m.def(
      "chunk_message",
      [](const py::bytes& data, std::uint64_t seed) {
        Rng rng(seed);
        py::list out;
        for (const auto& c : chunk_message(to_bytes(data), rng)) out.append(as_py(c));
        return out;
      },
      py::arg("data"), py::arg("seed") = 1);

  py::class_<Reassembler>(m, "Reassembler")
      .def(py::init<>())
      .def(
          "push",
          [](Reassembler& r, const py::bytes& chunk) -> std::optional<py::bytes> {
            auto done = r.push(chunk_of(chunk));
            if (!done) return std::nullopt;
            return as_py(*done);
          },
          py::arg("chunk"))
      .def_property_readonly("in_progress", &Reassembler::in_progress)
      .def_property_readonly("buffered", &Reassembler::buffered)
      .def("finish", &Reassembler::finish);

  // traces
  py::class_<Trace>(m, "Trace")
      .def(py::init<>())
      .def("__len__", [](const Trace& t) { return t.records.size(); })
      .def(
          "append", [](Trace& t, double seconds, const py::bytes& wire) { t.append(seconds, to_bytes(wire)); },
          py::arg("seconds"), py::arg("wire"))
      .def("records",
           [](const Trace& t) {
             py::list out;
             for (const auto& r : t.records) out.append(py::make_tuple(r.timestamp(), as_py(r.data)));
             return out;
           })
      .def("to_bytes", [](const Trace& t) { return as_py(encode_trace(t)); })
      .def_static("from_bytes", [](const py::bytes& b) { return decode_trace(to_bytes(b)); })
      .def(
          "write", [](const Trace& t, const std::string& path) { write_trace(t, std::filesystem::path(path)); },
          py::arg("path"))
      .def_static(
          "read", [](const std::string& path) { return read_trace(std::filesystem::path(path)); },
          py::arg("path"))
      .def("__eq__", [](const Trace& a, const Trace& b) { return a == b; });

  // analysis
  m.def(
      "report_json", [](const Trace& t) { return compute_report(t).to_json(); }, py::arg("trace"));
  m.def(
      "detect_hidden_nodes",
      [](const Trace& t) {
        py::list out;
        for (const auto& n : detect_hidden_nodes(t)) {
          py::dict d;
          d["mac"] = n.mac.to_string();
          d["first_seen"] = n.first_seen;
          d["advert_count"] = n.advert_count;
          out.append(d);
        }
        return out;
      },
      py::arg("trace"));
  m.def(
      "active_warden", [](const Trace& t) { return active_warden(t); }, py::arg("trace"));
  m.def(
      "active_warden_frame", [](const py::bytes& wire) { return as_py(active_warden(ByteView(to_bytes(wire)))); },
      py::arg("wire"));
  m.def(
      "estimate_bandwidth",
      [](double frames_per_day, std::uint32_t bits) { return bandwidth_dict(estimate_bandwidth(frames_per_day, bits)); },
      py::arg("frames_per_day"), py::arg("padding_bits") = kTcpAckPaddingBits);
  m.def(
      "estimate_bandwidth_shared",
      [](double total, double hosts, std::uint32_t bits) {
        return bandwidth_dict(estimate_bandwidth_shared(total, hosts, bits));
      },
      py::arg("total_frames_per_day"), py::arg("hosts"), py::arg("padding_bits") = kTcpAckPaddingBits);

  // simulation
  m.def(
      "simulate",
      [](const std::string& scenario_json, std::optional<std::uint64_t> seed) {
        const auto config = parse_scenario(scenario_json, seed);
        SimulationResult result;
        {
          py::gil_scoped_release release;
          result = run_scenario(config);
        }
        py::list hidden;
        py::list messages;
        py::list discoveries;
        for (const auto& h : config.hosts) {
          if (h.kind != HostKind::Hidden) continue;
          hidden.append(h.mac.to_string());
          for (const auto& msg : result.messages_for(h.mac)) {
            py::dict d;
            d["to"] = h.mac.to_string();
            d["from"] = msg.from.to_string();
            d["data"] = as_py(msg.data);
            messages.append(d);
          }
          for (const auto& peer : config.hosts) {
            if (peer.kind != HostKind::Hidden || peer.mac == h.mac) continue;
            const double t = result.discovery_time(h.mac, peer.mac);
            if (std::isnan(t)) continue;
            py::dict d;
            d["host"] = h.mac.to_string();
            d["peer"] = peer.mac.to_string();
            d["time"] = t;
            discoveries.append(d);
          }
        }
        py::list incomplete;
        for (const auto& [rx, tx] : result.incomplete_streams) {
          incomplete.append(py::make_tuple(rx.to_string(), tx.to_string()));
        }
        py::dict out;
        out["trace"] = py::cast(std::move(result.trace));
        out["hidden_hosts"] = hidden;
        out["messages"] = messages;
        out["discoveries"] = discoveries;
        out["incomplete_streams"] = incomplete;
        out["undelivered_transfers"] = result.undelivered_transfers;
        return out;
      },
      py::arg("scenario_json"), py::arg("seed") = py::none());
}
