#pragma once

#include <array>
#include <cmath>
#include <cstdint>

namespace dynfield {

template <class T>
struct Vec3 {
  T x = 0, y = 0, z = 0;

  Vec3() = default;
  Vec3(T x_, T y_, T z_) : x(x_), y(y_), z(z_) {}

  template <class U>
  explicit Vec3(const Vec3<U>& v) : x(T(v.x)), y(T(v.y)), z(T(v.z)) {}

  Vec3 operator+(const Vec3& o) const { return {x + o.x, y + o.y, z + o.z}; }
  Vec3 operator-(const Vec3& o) const { return {x - o.x, y - o.y, z - o.z}; }
  Vec3 operator*(T s) const { return {x * s, y * s, z * s}; }
  Vec3 operator/(T s) const { return {x / s, y / s, z / s}; }
  Vec3 operator-() const { return {-x, -y, -z}; }
  Vec3& operator+=(const Vec3& o) {
    x += o.x; y += o.y; z += o.z;
    return *this;
  }
  Vec3& operator*=(T s) {
    x *= s; y *= s; z *= s;
    return *this;
  }
  T operator[](int i) const { return i == 0 ? x : (i == 1 ? y : z); }

  T dot(const Vec3& o) const { return x * o.x + y * o.y + z * o.z; }
  Vec3 cross(const Vec3& o) const {
    return {y * o.z - z * o.y, z * o.x - x * o.z, x * o.y - y * o.x};
  }
  Vec3 cwise_mul(const Vec3& o) const { return {x * o.x, y * o.y, z * o.z}; }
  T norm2() const { return x * x + y * y + z * z; }
  T norm() const { return std::sqrt(norm2()); }
  Vec3 normalized() const {
    T n = norm();
    return n > 0 ? (*this) / n : Vec3{0, 0, 0};
  }
};

template <class T>
Vec3<T> operator*(T s, const Vec3<T>& v) {
  return v * s;
}

using Vec3f = Vec3<float>;
using Vec3d = Vec3<double>;

template <class T>
T clamp01(T v) {
  return v < T(0) ? T(0) : (v > T(1) ? T(1) : v);
}

// SplitMix64; used to derive independent per-ray / per-purpose RNG streams
// from (seed, stream-id) pairs so results do not depend on worker count.
inline uint64_t splitmix64(uint64_t state) {
  uint64_t z = state + 0x9e3779b97f4a7c15ull;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

// Tiny counter-seeded generator for jitter streams.
struct Rng64 {
  uint64_t s;
  explicit Rng64(uint64_t seed) : s(splitmix64(seed)) {}
  Rng64(uint64_t seed, uint64_t stream) : s(splitmix64(splitmix64(seed) ^ stream)) {}

  uint64_t next_u64() {
    s += 0x9e3779b97f4a7c15ull;
    uint64_t z = s;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
  }
  // uniform in [0,1)
  double next_double() { return double(next_u64() >> 11) * 0x1.0p-53; }
  float next_float() { return float(next_u64() >> 40) * 0x1.0p-24f; }
  uint32_t next_below(uint32_t n) { return uint32_t(next_u64() % n); }
};

}  // namespace dynfield
