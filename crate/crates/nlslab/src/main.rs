fn main() {
    println!("nlslab");
}
