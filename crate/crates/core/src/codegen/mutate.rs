//! Deliberately broken variants of explicit monitors.

use super::explicit::{EStmt, ExplicitMonitor};

/// Drop the last `unlock` of the first method (in order) that has one.
pub fn drop_last_unlock(em: &ExplicitMonitor) -> Option<ExplicitMonitor> {
    let mut out = em.clone();
    for m in &mut out.methods {
        if let Some(i) = m.body.iter().rposition(|s| matches!(s, EStmt::Unlock(_))) {
            m.body.remove(i);
            return Some(out);
        }
    }
    None
}

/// Swap the first pair of consecutive `lock` statements.
pub fn swap_first_acquire(em: &ExplicitMonitor) -> Option<ExplicitMonitor> {
    let mut out = em.clone();
    for m in &mut out.methods {
        let hit = m.body.windows(2).position(|w| matches!((&w[0], &w[1]), (EStmt::Lock(_), EStmt::Lock(_))));
        if let Some(i) = hit {
            m.body.swap(i, i + 1);
            return Some(out);
        }
    }
    None
}
