//! Synthetic programs with the graph shapes of the evaluated workloads.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use rand_core::RngCore;

use super::graph::{ProgramGraph, ProgramSpec};

fn space(width: u32) -> u64 {
    1 << width
}

/// Table `v -> (a v + b) mod p`.
fn affine_table(width: u32, a: u64, b: u64) -> Vec<u64> {
    let p = space(width);
    (0..p).map(|v| (a * v + b) % p).collect()
}

/// ReLU on the two's-complement reading of a `width`-bit message.
pub fn relu_table(width: u32) -> Vec<u64> {
    let p = space(width);
    (0..p).map(|v| if v < p / 2 { v } else { 0 }).collect()
}

fn build(spec: &ProgramSpec) -> ProgramGraph {
    ProgramGraph::from_spec(spec).expect("generated programs are valid")
}

/// `m` lookups with distinct tables on one scalar input.
pub fn fanout(m: usize, width: u32) -> ProgramGraph {
    let mut s = ProgramSpec::new();
    let x = s.input("x", &[1]);
    for i in 0..m {
        let t = s.table(&format!("t{i}"), affine_table(width, 1, i as u64));
        let y = s.lut(&format!("y{i}"), &x, &t);
        s.output(&format!("out{i}"), &y);
    }
    build(&s)
}

/// One table applied to every element of a `len`-element tensor.
pub fn tensor_map(len: usize, width: u32) -> ProgramGraph {
    let mut s = ProgramSpec::new();
    let x = s.input("x", &[len]);
    let t = s.table("relu", relu_table(width));
    let y = s.lut("y", &x, &t);
    s.output("out", &y);
    build(&s)
}

/// Two inputs, two constant products, their sum and a ReLU.
pub fn weighted_relu(width: u32) -> ProgramGraph {
    let mut s = ProgramSpec::new();
    let x = s.input("x", &[1]);
    let w = s.input("w", &[1]);
    let t = s.table("relu", relu_table(width));
    let a = s.mul_const("a", &x, 2);
    let b = s.mul_const("b", &w, 3);
    let c = s.add("c", &a, &b);
    let r = s.lut("r", &c, &t);
    s.output("out", &r);
    build(&s)
}

/// `layers` dependent lookup layers over `elems` independent lanes; layer
/// `i` uses its own table.
pub fn lut_dense(layers: usize, elems: usize, width: u32) -> ProgramGraph {
    let mut s = ProgramSpec::new();
    let mut x = s.input("x", &[elems]);
    for i in 0..layers {
        let t = s.table(&format!("t{i}"), affine_table(width, 2 * i as u64 + 1, i as u64));
        x = s.lut(&format!("l{i}"), &x, &t);
    }
    s.output("out", &x);
    build(&s)
}

/// Noise weight of a value: its variance in units of a fresh ciphertext.
/// Generated programs keep every lookup input and output at or below this.
pub const RANDOM_MAX_WEIGHT: u64 = 8;

fn pick<R: RngCore>(rng: &mut R, n: usize) -> usize {
    (rng.next_u64() % n as u64) as usize
}

/// Random valid program with at most `max_nodes` nodes: one to three
/// inputs of a common shape, then adds, small constant products and
/// lookups. Two of the tables share their entries, and values often feed
/// several lookups, so both dedup passes find work.
pub fn random_program<R: RngCore>(rng: &mut R, max_nodes: usize, width: u32) -> ProgramGraph {
    assert!(max_nodes >= 4, "need room for an input, a lookup and outputs");
    let p = space(width);
    let mut s = ProgramSpec::new();
    let shape = [1 + pick(rng, 3)];
    let mut tables: Vec<String> = Vec::new();
    for i in 0..3 {
        let a = 1 + 2 * (rng.next_u64() % (p / 2));
        let b = rng.next_u64() % p;
        tables.push(s.table(&format!("t{i}"), affine_table(width, a, b)));
    }
    let dup = s.tables["t0"].clone();
    tables.push(s.table("t0_copy", dup));
    tables.push(s.table("relu", relu_table(width)));

    // (id, noise weight, consumers so far)
    let mut vals: Vec<(String, u64, usize)> = Vec::new();
    let inputs = 1 + pick(rng, 3);
    for i in 0..inputs {
        vals.push((s.input(&format!("in{i}"), &shape), 1, 0));
    }
    let mut count = inputs;
    // Leave room for at least two outputs.
    while count + 2 < max_nodes {
        let i = pick(rng, vals.len());
        let id = format!("n{count}");
        let made = match pick(rng, 4) {
            0 => {
                let j = pick(rng, vals.len());
                let w = vals[i].1 + vals[j].1;
                (w <= RANDOM_MAX_WEIGHT).then(|| {
                    vals[j].2 += 1;
                    (s.add(&id, &vals[i].0, &vals[j].0), w)
                })
            }
            1 => {
                let c = [-2i64, -1, 2, 3][pick(rng, 4)];
                let w = vals[i].1 * (c * c) as u64;
                (w <= RANDOM_MAX_WEIGHT).then(|| (s.mul_const(&id, &vals[i].0, c), w))
            }
            _ => {
                let t = tables[pick(rng, tables.len())].clone();
                Some((s.lut(&id, &vals[i].0, &t), 1))
            }
        };
        if let Some((id, w)) = made {
            vals[i].2 += 1;
            vals.push((id, w, 0));
            count += 1;
        }
    }
    // Outputs for values nobody consumed, newest first, then the last
    // value if none were free.
    let mut free: Vec<usize> = (inputs..vals.len()).filter(|&i| vals[i].2 == 0).rev().collect();
    if free.is_empty() {
        free = vec![vals.len() - 1];
    }
    for (k, i) in free.into_iter().take(max_nodes - count).enumerate() {
        s.output(&format!("out{k}"), &vals[i].0);
    }
    build(&s)
}
