#pragma once

#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

#include "msnn/error.hpp"
#include "msnn/tensor.hpp"

namespace msnn {

// Little-endian binary file helpers. Multi-byte values are serialized
// byte-by-byte so the formats are identical on any host.

class BinaryWriter {
public:
    explicit BinaryWriter(const std::string& path) : path_(path), out_(path, std::ios::binary) {
        if (!out_) throw IoError("cannot open '" + path + "' for writing");
    }

    void write_bytes(const char* data, std::size_t n) {
        out_.write(data, static_cast<std::streamsize>(n));
        if (!out_) throw IoError("write failed on '" + path_ + "'");
    }

    void write_u16(std::uint16_t v) {
        char b[2] = {static_cast<char>(v & 0xff), static_cast<char>(v >> 8)};
        write_bytes(b, 2);
    }

    void write_u32(std::uint32_t v) {
        char b[4];
        for (int i = 0; i < 4; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xff);
        write_bytes(b, 4);
    }

    void write_f64(double v) {
        std::uint64_t bits;
        std::memcpy(&bits, &v, 8);
        char b[8];
        for (int i = 0; i < 8; ++i) b[i] = static_cast<char>((bits >> (8 * i)) & 0xff);
        write_bytes(b, 8);
    }

    void write_f64_array(const Vec& xs) {
        for (double x : xs) write_f64(x);
    }

    void write_tensor(const Tensor2& t) { write_f64_array(t.v); }

private:
    std::string path_;
    std::ofstream out_;
};

class BinaryReader {
public:
    explicit BinaryReader(const std::string& path) : path_(path), in_(path, std::ios::binary) {
        if (!in_) throw IoError("cannot open '" + path + "'");
    }

    void read_bytes(char* data, std::size_t n) {
        in_.read(data, static_cast<std::streamsize>(n));
        if (in_.gcount() != static_cast<std::streamsize>(n))
            throw IoError("'" + path_ + "' is truncated");
    }

    void expect_magic(const char* magic) {
        char buf[4];
        read_bytes(buf, 4);
        if (std::memcmp(buf, magic, 4) != 0)
            throw IoError("'" + path_ + "' has wrong magic (expected " + magic + ")");
    }

    std::uint16_t read_u16() {
        unsigned char b[2];
        read_bytes(reinterpret_cast<char*>(b), 2);
        return static_cast<std::uint16_t>(b[0] | (b[1] << 8));
    }

    std::uint32_t read_u32() {
        unsigned char b[4];
        read_bytes(reinterpret_cast<char*>(b), 4);
        std::uint32_t v = 0;
        for (int i = 3; i >= 0; --i) v = (v << 8) | b[i];
        return v;
    }

    /// Big-endian 32-bit (the handwritten-digit dataset's header convention).
    std::uint32_t read_u32_be() {
        unsigned char b[4];
        read_bytes(reinterpret_cast<char*>(b), 4);
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i) v = (v << 8) | b[i];
        return v;
    }

    double read_f64() {
        unsigned char b[8];
        read_bytes(reinterpret_cast<char*>(b), 8);
        std::uint64_t bits = 0;
        for (int i = 7; i >= 0; --i) bits = (bits << 8) | b[i];
        double v;
        std::memcpy(&v, &bits, 8);
        return v;
    }

    Vec read_f64_array(std::size_t n) {
        Vec xs(n);
        for (double& x : xs) x = read_f64();
        return xs;
    }

    Tensor2 read_tensor(int rows, int cols) {
        return Tensor2(rows, cols, read_f64_array(static_cast<std::size_t>(rows) * cols));
    }

    void expect_eof() {
        char c;
        in_.read(&c, 1);
        if (!in_.eof()) throw IoError("'" + path_ + "' has trailing bytes");
    }

private:
    std::string path_;
    std::ifstream in_;
};

} // namespace msnn
