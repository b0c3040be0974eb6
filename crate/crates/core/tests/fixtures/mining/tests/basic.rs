use mining::shapes::Rect;
use mining::*;

fn fixture_value() -> i32 {
    9
}

#[test]
fn adds() {
    assert_eq!(add(2, 3), 5);
}

#[test]
fn clamps() {
    let v = clamp(fixture_value(), 0, 5);
    assert!(clamp(-1, 0, 5) == 0);
    assert_eq!(v, 5);
}

#[test]
fn area() {
    assert_eq!(Rect::new(2, 3).area(), 6);
}

#[test]
fn external_only() {
    assert_eq!("ab".to_uppercase(), "AB");
}
