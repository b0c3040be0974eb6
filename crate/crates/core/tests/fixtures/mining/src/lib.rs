pub mod shapes;

pub fn add(a: i32, b: i32) -> i32 {
    a + b
}

pub fn clamp(x: i32, lo: i32, hi: i32) -> i32 {
    if x < lo {
        lo
    } else if x > hi {
        hi
    } else {
        x
    }
}
