#include <cmath>
#include <fstream>
#include <string>

#include "flowsplat/error.hpp"
#include "flowsplat/render.hpp"

namespace flowsplat {

void write_ppm(const std::filesystem::path& path, const Image& image) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  out << "P6\n" << image.width << ' ' << image.height << "\n255\n";
  std::string bytes(image.pixels.size(), '\0');
  for (std::size_t i = 0; i < image.pixels.size(); ++i) {
    const double v = std::floor(std::clamp(image.pixels[i], 0.0, 1.0) * 255.0 + 0.5);
    bytes[i] = static_cast<char>(static_cast<unsigned char>(v));
  }
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

namespace {

std::string next_token(std::istream& in) {
  std::string token;
  char c;
  while (in.get(c)) {
    if (c == '#') {
      std::string rest;
      std::getline(in, rest);
      continue;
    }
    if (std::isspace(static_cast<unsigned char>(c))) {
      if (!token.empty()) return token;
      continue;
    }
    token.push_back(c);
  }
  return token;
}

}  // namespace

Image read_ppm(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw UsageError("cannot open " + path.string());
  if (next_token(in) != "P6") throw ParseError(path.string() + ": not a binary PPM (P6)");
  int w = 0;
  int h = 0;
  int maxval = 0;
  try {
    w = std::stoi(next_token(in));
    h = std::stoi(next_token(in));
    maxval = std::stoi(next_token(in));
  } catch (const std::exception&) {
    throw ParseError(path.string() + ": malformed PPM header");
  }
  if (w <= 0 || h <= 0 || maxval != 255)
    throw ParseError(path.string() + ": unsupported PPM dimensions or max value");
  Image image(w, h);
  std::string bytes(image.pixels.size(), '\0');
  in.read(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (in.gcount() != static_cast<std::streamsize>(bytes.size()))
    throw ParseError(path.string() + ": truncated pixel data");
  for (std::size_t i = 0; i < bytes.size(); ++i)
    image.pixels[i] = static_cast<unsigned char>(bytes[i]) / 255.0;
  return image;
}

}  // namespace flowsplat
