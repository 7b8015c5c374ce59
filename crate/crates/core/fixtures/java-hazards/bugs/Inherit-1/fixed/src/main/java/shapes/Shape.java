package shapes;

public class Shape {
    protected double side;

    public double area() {
        double result = side * side;
        return result;
    }
}
