//! Process-wide memo for immutable per-parameter objects (weights, rules).
//!
//! Many readers, one writer per key: a miss builds outside the lock, and the
//! first inserted value wins so every caller sees the same `Arc`.

use std::any::{Any, TypeId};
use std::collections::HashMap;
use std::sync::{Arc, OnceLock, RwLock};

type Slot = Arc<dyn Any + Send + Sync>;

fn table() -> &'static RwLock<HashMap<(TypeId, String), Slot>> {
    static TABLE: OnceLock<RwLock<HashMap<(TypeId, String), Slot>>> = OnceLock::new();
    TABLE.get_or_init(Default::default)
}

/// Returns the cached value for `(V, key)`, building it with `build` on a miss.
pub fn get_or_build<V, E>(key: String, build: impl FnOnce() -> Result<V, E>) -> Result<Arc<V>, E>
where
    V: Any + Send + Sync,
{
    let k = (TypeId::of::<V>(), key);
    if let Some(hit) = table().read().unwrap().get(&k) {
        return Ok(hit.clone().downcast::<V>().expect("cache slot type"));
    }
    let fresh: Slot = Arc::new(build()?);
    let mut w = table().write().unwrap();
    let slot = w.entry(k).or_insert(fresh).clone();
    Ok(slot.downcast::<V>().expect("cache slot type"))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn same_arc_for_same_key() {
        let a = get_or_build::<Vec<u8>, ()>("k".into(), || Ok(vec![1])).unwrap();
        let b = get_or_build::<Vec<u8>, ()>("k".into(), || Ok(vec![2])).unwrap();
        assert!(Arc::ptr_eq(&a, &b));
        let c = get_or_build::<Vec<u16>, ()>("k".into(), || Ok(vec![3])).unwrap();
        assert_eq!(*c, vec![3]);
        assert!(get_or_build::<Vec<u32>, &str>("e".into(), || Err("no")).is_err());
    }

    #[test]
    fn concurrent_readers_agree() {
        let ptrs: Vec<usize> = std::thread::scope(|s| {
            let hs: Vec<_> = (0..8)
                .map(|i| {
                    s.spawn(move || {
                        let v = get_or_build::<String, ()>("shared".into(), || Ok(format!("v{i}"))).unwrap();
                        Arc::as_ptr(&v) as usize
                    })
                })
                .collect();
            hs.into_iter().map(|h| h.join().unwrap()).collect()
        });
        assert!(ptrs.windows(2).all(|w| w[0] == w[1]));
    }
}
