fn main() {
    println!("fpsi");
}
