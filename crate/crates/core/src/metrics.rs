//! Per-thread invocation counters for the expensive server-side primitives.

use std::cell::Cell;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Serialize, serde::Deserialize)]
pub struct Counters {
    pub pet: u64,
    pub cca2_decrypt: u64,
    pub threshold_decrypt: u64,
}

impl std::ops::Sub for Counters {
    type Output = Counters;

    fn sub(self, rhs: Counters) -> Counters {
        Counters {
            pet: self.pet - rhs.pet,
            cca2_decrypt: self.cca2_decrypt - rhs.cca2_decrypt,
            threshold_decrypt: self.threshold_decrypt - rhs.threshold_decrypt,
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub(crate) enum Primitive {
    Pet,
    Cca2Decrypt,
    ThresholdDecrypt,
}

thread_local! {
    static COUNTERS: Cell<Counters> = const { Cell::new(Counters { pet: 0, cca2_decrypt: 0, threshold_decrypt: 0 }) };
}

pub(crate) fn record(primitive: Primitive) {
    COUNTERS.with(|c| {
        let mut v = c.get();
        match primitive {
            Primitive::Pet => v.pet += 1,
            Primitive::Cca2Decrypt => v.cca2_decrypt += 1,
            Primitive::ThresholdDecrypt => v.threshold_decrypt += 1,
        }
        c.set(v);
    });
}

pub fn snapshot() -> Counters {
    COUNTERS.with(Cell::get)
}
