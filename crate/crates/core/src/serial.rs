//! Canonical JSON encoding of protocol objects.
//!
//! Group elements and scalars encode as decimal strings. Decoding needs to
//! know the group so that membership can be checked on the way in; the group
//! is supplied through a thread-local context for the duration of one decode.

use std::cell::RefCell;

use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::group::GroupParams;

thread_local! {
    static CONTEXT: RefCell<Option<GroupParams>> = const { RefCell::new(None) };
}

pub(crate) fn context() -> Option<GroupParams> {
    CONTEXT.with(|c| c.borrow().clone())
}

struct Restore(Option<GroupParams>);

impl Drop for Restore {
    fn drop(&mut self) {
        let previous = self.0.take();
        CONTEXT.with(|c| *c.borrow_mut() = previous);
    }
}

/// Runs `f` with `group` installed as the decoding context.
pub fn with_group<T>(group: &GroupParams, f: impl FnOnce() -> T) -> T {
    let previous = CONTEXT.with(|c| c.borrow_mut().replace(group.clone()));
    let _restore = Restore(previous);
    f()
}

pub fn to_json<T: Serialize + ?Sized>(value: &T) -> String {
    serde_json::to_string(value).expect("protocol objects always serialize")
}

pub fn from_json<T: DeserializeOwned>(group: &GroupParams, text: &str) -> Result<T, serde_json::Error> {
    with_group(group, || serde_json::from_str(text))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::group::GroupElement;

    #[test]
    fn elements_decode_only_with_context_and_membership() {
        let grp = GroupParams::toy();
        let x = grp.element_u64(13).unwrap();
        let text = to_json(&x);
        assert_eq!(text, "\"13\"");
        assert_eq!(from_json::<GroupElement>(&grp, &text).unwrap(), x);
        assert!(serde_json::from_str::<GroupElement>(&text).is_err());
        assert!(from_json::<GroupElement>(&grp, "\"5\"").is_err());
    }
}
