// Licensed under the Apache License, Version 2.0 (the "License"); you may
// not use this file except in compliance with the License. You may obtain
// a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS, WITHOUT
// WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied. See the
// License for the specific language governing permissions and limitations
// under the License.

//! Arithmetic in GF(2^8) and GF(2^16).
//!
//! Elements are stored as `u16` in both fields. Addition is XOR;
//! multiplication goes through log/antilog tables generated from
//! `alpha = 2` and a primitive polynomial:
//!
//! - GF(2^8):  x^8 + x^4 + x^3 + x^2 + 1       (0x11D)
//! - GF(2^16): x^16 + x^12 + x^3 + x + 1       (0x1100B)

use std::sync::OnceLock;

use crate::{Error, Result};

pub const POLY_GF256: u32 = 0x11D;
pub const POLY_GF65536: u32 = 0x1_100B;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FieldWidth {
    W8,
    W16,
}

impl FieldWidth {
    pub fn bits(self) -> u32 {
        match self {
            FieldWidth::W8 => 8,
            FieldWidth::W16 => 16,
        }
    }

    /// Bytes per field symbol in a payload.
    pub fn symbol_bytes(self) -> usize {
        self.bits() as usize / 8
    }

    /// Smallest width with at least `points` distinct nonzero elements.
    pub fn for_points(points: usize) -> Result<Self> {
        if points < 256 {
            Ok(FieldWidth::W8)
        } else if points < 65_536 {
            Ok(FieldWidth::W16)
        } else {
            Err(Error::Unsupported(format!(
                "{points} evaluation points exceed GF(2^16)"
            )))
        }
    }
}

#[derive(Debug)]
pub struct GaloisField {
    width: FieldWidth,
    order_minus_one: u32,
    exp: Vec<u16>,
    log: Vec<u32>,
}

impl GaloisField {
    fn build(width: FieldWidth, poly: u32) -> Self {
        let size = 1u32 << width.bits();
        let order_minus_one = size - 1;
        let mut exp = vec![0u16; 2 * order_minus_one as usize];
        let mut log = vec![0u32; size as usize];
        let mut x: u32 = 1;
        for i in 0..order_minus_one {
            exp[i as usize] = x as u16;
            log[x as usize] = i;
            x <<= 1;
            if x & size != 0 {
                x ^= poly;
            }
        }
        for i in order_minus_one as usize..exp.len() {
            exp[i] = exp[i - order_minus_one as usize];
        }
        GaloisField {
            width,
            order_minus_one,
            exp,
            log,
        }
    }

    pub fn get(width: FieldWidth) -> &'static GaloisField {
        static GF8: OnceLock<GaloisField> = OnceLock::new();
        static GF16: OnceLock<GaloisField> = OnceLock::new();
        match width {
            FieldWidth::W8 => GF8.get_or_init(|| GaloisField::build(width, POLY_GF256)),
            FieldWidth::W16 => GF16.get_or_init(|| GaloisField::build(width, POLY_GF65536)),
        }
    }

    pub fn width(&self) -> FieldWidth {
        self.width
    }

    /// Number of field elements.
    pub fn size(&self) -> u32 {
        self.order_minus_one + 1
    }

    #[inline]
    pub fn add(&self, a: u16, b: u16) -> u16 {
        a ^ b
    }

    #[inline]
    pub fn mul(&self, a: u16, b: u16) -> u16 {
        if a == 0 || b == 0 {
            return 0;
        }
        self.exp[(self.log[a as usize] + self.log[b as usize]) as usize]
    }

    pub fn inv(&self, a: u16) -> Result<u16> {
        if a == 0 {
            return Err(Error::domain("inverse of zero"));
        }
        let l = self.log[a as usize];
        Ok(self.exp[((self.order_minus_one - l) % self.order_minus_one) as usize])
    }

    pub fn div(&self, a: u16, b: u16) -> Result<u16> {
        Ok(self.mul(a, self.inv(b)?))
    }

    pub fn pow(&self, a: u16, e: u32) -> u16 {
        if e == 0 {
            return 1;
        }
        if a == 0 {
            return 0;
        }
        let l = (self.log[a as usize] as u64 * e as u64) % self.order_minus_one as u64;
        self.exp[l as usize]
    }

    /// `dst[k] += coef * src[k]` over symbols.
    pub fn mul_add_into(&self, dst: &mut [u16], coef: u16, src: &[u16]) {
        if coef == 0 {
            return;
        }
        let lc = self.log[coef as usize];
        for (d, &s) in dst.iter_mut().zip(src) {
            if s != 0 {
                *d ^= self.exp[(lc + self.log[s as usize]) as usize];
            }
        }
    }

    pub fn scale(&self, row: &mut [u16], coef: u16) {
        for v in row.iter_mut() {
            *v = self.mul(*v, coef);
        }
    }
}

/// Splits a payload into field symbols (big-endian pairs for GF(2^16)).
pub fn bytes_to_symbols(bytes: &[u8], width: FieldWidth) -> Result<Vec<u16>> {
    match width {
        FieldWidth::W8 => Ok(bytes.iter().map(|&b| b as u16).collect()),
        FieldWidth::W16 => {
            if !bytes.len().is_multiple_of(2) {
                return Err(Error::domain(format!(
                    "payload of {} bytes is not a whole number of 16-bit symbols",
                    bytes.len()
                )));
            }
            Ok(bytes
                .chunks_exact(2)
                .map(|c| u16::from_be_bytes([c[0], c[1]]))
                .collect())
        }
    }
}

pub fn symbols_to_bytes(symbols: &[u16], width: FieldWidth) -> Vec<u8> {
    match width {
        FieldWidth::W8 => symbols.iter().map(|&s| s as u8).collect(),
        FieldWidth::W16 => symbols.iter().flat_map(|s| s.to_be_bytes()).collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::seeded;
    use rand::Rng;

    /// Shift-and-add multiplication reduced by the field polynomial.
    fn slow_mul(a: u16, b: u16, width: FieldWidth) -> u16 {
        let (bits, poly) = match width {
            FieldWidth::W8 => (8, POLY_GF256),
            FieldWidth::W16 => (16, POLY_GF65536),
        };
        let mut acc: u32 = 0;
        let mut a = a as u32;
        let mut b = b as u32;
        while b != 0 {
            if b & 1 != 0 {
                acc ^= a;
            }
            b >>= 1;
            a <<= 1;
            if a & (1 << bits) != 0 {
                a ^= poly;
            }
        }
        acc as u16
    }

    #[test]
    fn generator_reaches_every_nonzero_element() {
        for width in [FieldWidth::W8, FieldWidth::W16] {
            let gf = GaloisField::get(width);
            let mut seen = vec![false; gf.size() as usize];
            for i in 0..gf.size() - 1 {
                seen[gf.exp[i as usize] as usize] = true;
            }
            assert!(!seen[0]);
            assert!(
                seen[1..].iter().all(|&s| s),
                "{width:?} polynomial not primitive"
            );
        }
    }

    #[test]
    fn addition_is_self_inverse() {
        let gf = GaloisField::get(FieldWidth::W8);
        for a in 0..256u16 {
            assert_eq!(gf.add(a, a), 0);
        }
    }

    #[test]
    fn every_nonzero_gf256_element_has_an_inverse() {
        let gf = GaloisField::get(FieldWidth::W8);
        for a in 1..256u16 {
            assert_eq!(gf.mul(a, gf.inv(a).unwrap()), 1);
        }
        assert!(gf.inv(0).is_err());
    }

    #[test]
    fn table_multiplication_matches_shift_and_add() {
        let gf = GaloisField::get(FieldWidth::W8);
        for a in 0..256u16 {
            for b in 0..256u16 {
                assert_eq!(gf.mul(a, b), slow_mul(a, b, FieldWidth::W8));
            }
        }
        let gf16 = GaloisField::get(FieldWidth::W16);
        let mut rng = seeded(9);
        for _ in 0..20_000 {
            let (a, b): (u16, u16) = (rng.gen(), rng.gen());
            assert_eq!(gf16.mul(a, b), slow_mul(a, b, FieldWidth::W16));
        }
    }

    #[test]
    fn field_axioms_on_random_triples() {
        let mut rng = seeded(10);
        for width in [FieldWidth::W8, FieldWidth::W16] {
            let gf = GaloisField::get(width);
            let mask = (gf.size() - 1) as u16;
            for _ in 0..5000 {
                let a = rng.gen::<u16>() & mask;
                let b = rng.gen::<u16>() & mask;
                let c = rng.gen::<u16>() & mask;
                assert_eq!(gf.mul(a, gf.add(b, c)), gf.add(gf.mul(a, b), gf.mul(a, c)));
                assert_eq!(gf.mul(a, gf.mul(b, c)), gf.mul(gf.mul(a, b), c));
                assert_eq!(gf.mul(a, b), gf.mul(b, a));
                if a != 0 {
                    assert_eq!(gf.mul(a, gf.inv(a).unwrap()), 1);
                }
            }
        }
    }

    #[test]
    fn pow_matches_repeated_multiplication() {
        let gf = GaloisField::get(FieldWidth::W8);
        for a in [0u16, 1, 2, 3, 77, 255] {
            let mut acc = 1;
            for e in 0..20 {
                assert_eq!(gf.pow(a, e), acc);
                acc = gf.mul(acc, a);
            }
        }
    }

    #[test]
    fn symbol_conversion() {
        let bytes = [1u8, 2, 3, 4];
        assert_eq!(
            bytes_to_symbols(&bytes, FieldWidth::W16).unwrap(),
            vec![0x0102, 0x0304]
        );
        let back = symbols_to_bytes(&[0x0102, 0x0304], FieldWidth::W16);
        assert_eq!(back, bytes);
        assert!(bytes_to_symbols(&[1, 2, 3], FieldWidth::W16).is_err());
        assert_eq!(FieldWidth::for_points(255).unwrap(), FieldWidth::W8);
        assert_eq!(FieldWidth::for_points(256).unwrap(), FieldWidth::W16);
        assert!(FieldWidth::for_points(65_536).is_err());
    }
}
