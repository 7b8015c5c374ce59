package shapes;

public class Square extends Shape {
    @Override
    public double area() {
        return side * side;
    }

    public double doubled() {
        return 2 * area();
    }
}
