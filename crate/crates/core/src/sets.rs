//! Ground-set and set-family storage.
//!
//! Each set keeps its members in an array with a position map, giving
//! constant-time membership, constant-time uniform draws, and O(1) outlier
//! deactivation: a deactivated element is swapped to the end of the active
//! prefix and the active count is decremented. Restoring the count brings
//! the deactivated elements back.

use std::collections::HashMap;

use rand::Rng;
use thiserror::Error;

/// Dense index of an element in the ground set.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ElementId(pub usize);

/// Handle to a set inside a [`SetStore`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct SetHandle(pub(crate) usize);

impl SetHandle {
    pub fn index(self) -> usize {
        self.0
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum SetError {
    #[error("set has no active elements")]
    EmptySet,
}

#[derive(Debug, Clone, Default)]
struct SetRec {
    members: Vec<ElementId>,
    position: HashMap<ElementId, usize>,
    active: usize,
}

/// A family of sets over a common ground set of elements.
#[derive(Debug, Clone, Default)]
pub struct SetStore {
    sets: Vec<SetRec>,
}

impl SetStore {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds a set with the given members. Duplicate ids are ignored.
    pub fn add_set<I: IntoIterator<Item = ElementId>>(&mut self, members: I) -> SetHandle {
        let mut rec = SetRec::default();
        for x in members {
            if !rec.position.contains_key(&x) {
                rec.position.insert(x, rec.members.len());
                rec.members.push(x);
            }
        }
        rec.active = rec.members.len();
        self.sets.push(rec);
        SetHandle(self.sets.len() - 1)
    }

    pub fn num_sets(&self) -> usize {
        self.sets.len()
    }

    fn rec(&self, set: SetHandle) -> &SetRec {
        &self.sets[set.0]
    }

    fn rec_mut(&mut self, set: SetHandle) -> &mut SetRec {
        &mut self.sets[set.0]
    }

    /// Total number of members, active or not.
    pub fn len(&self, set: SetHandle) -> usize {
        self.rec(set).members.len()
    }

    pub fn is_empty(&self, set: SetHandle) -> bool {
        self.len(set) == 0
    }

    /// Number of active (non-deactivated) members.
    pub fn active_count(&self, set: SetHandle) -> usize {
        self.rec(set).active
    }

    /// True iff `x` is an active member of the set.
    pub fn contains(&self, set: SetHandle, x: ElementId) -> bool {
        let rec = self.rec(set);
        match rec.position.get(&x) {
            Some(&pos) => pos < rec.active,
            None => false,
        }
    }

    /// Uniform draw over the active members.
    pub fn sample_uniform<R: Rng + ?Sized>(
        &self,
        set: SetHandle,
        rng: &mut R,
    ) -> Result<ElementId, SetError> {
        let rec = self.rec(set);
        if rec.active == 0 {
            return Err(SetError::EmptySet);
        }
        Ok(rec.members[rng.gen_range(0..rec.active)])
    }

    /// Member at a given array position (active prefix first).
    pub fn member_at(&self, set: SetHandle, pos: usize) -> ElementId {
        self.rec(set).members[pos]
    }

    /// Iterates over the active members of a set.
    pub fn active_members(&self, set: SetHandle) -> impl Iterator<Item = ElementId> + '_ {
        let rec = self.rec(set);
        rec.members[..rec.active].iter().copied()
    }

    /// Deactivates `x`: swaps it to the end of the active prefix and shrinks
    /// the prefix. Returns false (and leaves the set untouched) if `x` is not
    /// an active member.
    pub fn deactivate(&mut self, set: SetHandle, x: ElementId) -> bool {
        let rec = self.rec_mut(set);
        let pos = match rec.position.get(&x) {
            Some(&pos) if pos < rec.active => pos,
            _ => return false,
        };
        let last = rec.active - 1;
        let moved = rec.members[last];
        rec.members.swap(pos, last);
        rec.position.insert(moved, pos);
        rec.position.insert(x, last);
        rec.active = last;
        true
    }

    /// Reactivates every member of the set.
    pub fn restore(&mut self, set: SetHandle) {
        let rec = self.rec_mut(set);
        rec.active = rec.members.len();
    }

    /// Rolls the active count back to a previously observed value.
    /// Deactivated elements sit in positions `[count, len)`, so raising the
    /// count reactivates exactly the elements deactivated since then.
    pub(crate) fn restore_to(&mut self, set: SetHandle, count: usize) {
        let rec = self.rec_mut(set);
        debug_assert!(count <= rec.members.len());
        rec.active = count;
    }
}
