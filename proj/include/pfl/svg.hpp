#pragma once

#include <cstdio>
#include <filesystem>
#include <string>

#include "pfl/error.hpp"
#include "pfl/instance.hpp"
#include "pfl/io.hpp"

namespace pfl {

namespace detail {

inline std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3f", v);
  return buf;
}

inline std::string xml_escape(std::string_view s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

}  // namespace detail

// Layout drawing in screen coordinates (y grows downwards).
inline std::string render_svg(const Instance& inst, const Layout& layout) {
  if (layout.labels.size() != inst.size()) throw Error(ErrorCode::Arity, "layout size does not match instance");
  const Rect& d = inst.drawing;
  auto sx = [&](double x) { return detail::num(x - d.origin.x); };
  auto sy = [&](double y) { return detail::num(d.origin.y + d.h - y); };
  std::string out;
  out += "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
  out += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + detail::num(d.w) + "\" height=\"" +
         detail::num(d.h) + "\" viewBox=\"0 0 " + detail::num(d.w) + " " + detail::num(d.h) + "\">\n";
  out += "<rect class=\"frame\" x=\"0\" y=\"0\" width=\"" + detail::num(d.w) + "\" height=\"" +
         detail::num(d.h) + "\" fill=\"white\" stroke=\"black\"/>\n";

  for (std::size_t i = 0; i < inst.size(); ++i) {
    const Placement& p = layout.labels[i];
    if (!p.placed || !p.leader) continue;
    out += "<line class=\"leader\" x1=\"" + sx(p.leader->from.x) + "\" y1=\"" + sy(p.leader->from.y) +
           "\" x2=\"" + sx(p.leader->to.x) + "\" y2=\"" + sy(p.leader->to.y) +
           "\" stroke=\"black\" stroke-width=\"1\"/>\n";
  }
  for (std::size_t i = 0; i < inst.size(); ++i) {
    const Anchor& a = inst.anchors[i];
    const Placement& p = layout.labels[i];
    const std::string x = sx(p.origin.x);
    const std::string y = sy(p.origin.y + a.label.h);
    const std::string w = detail::num(a.label.w);
    const std::string h = detail::num(a.label.h);
    if (p.placed) {
      out += "<rect class=\"label\" x=\"" + x + "\" y=\"" + y + "\" width=\"" + w + "\" height=\"" +
             h + "\" fill=\"#d0d0d0\" stroke=\"#808080\"/>\n";
      out += "<text x=\"" + sx(p.origin.x + a.label.w / 2) + "\" y=\"" +
             sy(p.origin.y + a.label.h / 2) +
             "\" font-family=\"monospace\" font-size=\"16\" text-anchor=\"middle\" "
             "dominant-baseline=\"central\">" +
             detail::xml_escape(a.text) + "</text>\n";
    } else {
      out += "<rect class=\"missing\" x=\"" + sx(a.point.x) + "\" y=\"" + sy(a.point.y + a.label.h) +
             "\" width=\"" + w + "\" height=\"" + h + "\" fill=\"none\" stroke=\"red\"/>\n";
    }
  }
  for (std::size_t i = 0; i < inst.size(); ++i) {
    const Anchor& a = inst.anchors[i];
    const char* cls = layout.labels[i].placed ? "anchor" : "unplaced";
    const char* color = layout.labels[i].placed ? "green" : "red";
    out += std::string("<circle class=\"") + cls + "\" cx=\"" + sx(a.point.x) + "\" cy=\"" +
           sy(a.point.y) + "\" r=\"3\" fill=\"" + color + "\"/>\n";
  }
  out += "</svg>\n";
  return out;
}

inline void render_svg(const Instance& inst, const Layout& layout, const std::filesystem::path& path) {
  write_file(path, render_svg(inst, layout));
}

}  // namespace pfl
