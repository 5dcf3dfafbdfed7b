use thiserror::Error;

/// Alignment of every auto-placed array base. A multiple of every legal line
/// size, so placement does not depend on the cache being simulated.
pub const ARRAY_ALIGN: u64 = 256;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TraceError {
    #[error("arrays {a:?} and {b:?} overlap")]
    Overlap { a: String, b: String },
    #[error("access to unknown array id {0}")]
    UnknownArray(u32),
    #[error("access [{offset}, +{len}) outside array {name:?} of {size} bytes")]
    OutOfBounds { name: String, offset: u64, len: u32, size: u64 },
    #[error("zero-length access to array {0:?}")]
    Empty(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ArrayId(pub u32);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum AccessKind {
    Read,
    Write,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Access {
    pub array: ArrayId,
    pub offset: u64,
    pub len: u32,
    pub kind: AccessKind,
}

impl Access {
    pub fn read(array: ArrayId, offset: u64, len: u32) -> Self {
        Access { array, offset, len, kind: AccessKind::Read }
    }

    pub fn write(array: ArrayId, offset: u64, len: u32) -> Self {
        Access { array, offset, len, kind: AccessKind::Write }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ArrayRegion {
    pub name: String,
    pub base: u64,
    pub size: u64,
}

/// Flat synthetic address space. Arrays added with [`AddressSpace::add_array`]
/// are placed back to back, each base aligned up to [`ARRAY_ALIGN`].
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct AddressSpace {
    regions: Vec<ArrayRegion>,
    next: u64,
}

impl AddressSpace {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_array(&mut self, name: impl Into<String>, size: u64) -> ArrayId {
        let base = self.next.div_ceil(ARRAY_ALIGN) * ARRAY_ALIGN;
        self.place(name, base, size)
    }

    /// Places an array at an explicit base. Overlaps are reported by
    /// [`AddressSpace::validate`], not here.
    pub fn place(&mut self, name: impl Into<String>, base: u64, size: u64) -> ArrayId {
        let id = ArrayId(self.regions.len() as u32);
        self.regions.push(ArrayRegion { name: name.into(), base, size });
        self.next = self.next.max(base + size);
        id
    }

    pub fn region(&self, id: ArrayId) -> Option<&ArrayRegion> {
        self.regions.get(id.0 as usize)
    }

    pub fn regions(&self) -> &[ArrayRegion] {
        &self.regions
    }

    pub fn validate(&self) -> Result<(), TraceError> {
        let mut sorted: Vec<&ArrayRegion> = self.regions.iter().filter(|r| r.size > 0).collect();
        sorted.sort_by_key(|r| r.base);
        for w in sorted.windows(2) {
            if w[0].base + w[0].size > w[1].base {
                return Err(TraceError::Overlap { a: w[0].name.clone(), b: w[1].name.clone() });
            }
        }
        Ok(())
    }

    /// Resolves an access to its absolute byte address.
    pub fn resolve(&self, access: &Access) -> Result<u64, TraceError> {
        let region = self.region(access.array).ok_or(TraceError::UnknownArray(access.array.0))?;
        if access.len == 0 {
            return Err(TraceError::Empty(region.name.clone()));
        }
        if access.offset + access.len as u64 > region.size {
            return Err(TraceError::OutOfBounds {
                name: region.name.clone(),
                offset: access.offset,
                len: access.len,
                size: region.size,
            });
        }
        Ok(region.base + access.offset)
    }
}

/// Anything that consumes a stream of accesses: a recorded trace or a live
/// simulator.
pub trait AccessSink {
    fn record(&mut self, access: Access);
}

/// An ordered access stream over an address space.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct AccessTrace {
    pub space: AddressSpace,
    pub accesses: Vec<Access>,
}

impl AccessTrace {
    pub fn new(space: AddressSpace) -> Self {
        AccessTrace { space, accesses: Vec::new() }
    }

    pub fn len(&self) -> usize {
        self.accesses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.accesses.is_empty()
    }
}

impl AccessSink for AccessTrace {
    fn record(&mut self, access: Access) {
        self.accesses.push(access);
    }
}
