// Copyright 2026 The hoctree Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

//! Linear-scan reference for range search.

use alloc::vec::Vec;

use crate::geometry::{MalformedQuery, RangeQuery, StObject};

/// Objects inside the closed box `q`, in input order.
pub fn scan_range(objects: &[StObject], q: &RangeQuery) -> Result<Vec<StObject>, MalformedQuery> {
    q.validate()?;
    Ok(objects.iter().filter(|o| q.contains(o)).copied().collect())
}
